#include "apts/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace apts {

namespace {

struct Entry {
  std::string value;
  std::size_t line = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& source, const std::string& key, std::size_t line, const std::string& msg) {
  throw ConfigError(source + ":" + std::to_string(line) + ": key '" + key + "': " + msg);
}

class Reader {
 public:
  Reader(std::string source, std::map<std::string, Entry> entries)
      : source_(std::move(source)), entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  template <class F>
  void apply(const std::string& key, F&& set) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    try {
      set(it->second.value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      fail(source_, key, it->second.line, e.what());
    }
  }

  double number(const std::string& v) const {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw std::invalid_argument("not a number: " + v);
    return out;
  }

  std::uint64_t count(const std::string& v) const {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
      throw std::invalid_argument("not a non-negative integer: " + v);
    }
    return out;
  }

  bool flag(const std::string& v) const {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("not a boolean: " + v);
  }

  std::size_t line_of(const std::string& key) const { return entries_.at(key).line; }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "optimizer",     "dataset",        "model",          "activation",      "head",
      "dataset_size",  "noise",          "data_seed",      "images",          "labels",
      "validation_split", "batch_size",  "batch_mode",     "epochs",          "seeds",
      "output",        "timing",         "lr",             "momentum",        "delta_init",
      "subdomain_count", "inner_iters",  "global_tr_iters", "local_solver",   "local_hessian",
      "global_hessian", "tr_norm",       "eta1",           "eta2",            "gamma_dec",
      "gamma_inc",     "delta_min",      "delta_max",      "feed_back_radius", "moments",
      "parallel",      "local_iters",    "lr_init",        "lr_min",          "lr_max",
      "partition"};
  return keys;
}

HessianKind parse_hessian(const std::string& v) {
  if (v == "identity") return HessianKind::identity;
  if (v == "lbfgs") return HessianKind::lbfgs;
  throw std::invalid_argument("expected identity or lbfgs, got " + v);
}

}  // namespace

OptimizerId parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerId::adam;
  if (name == "sgd") return OptimizerId::sgd;
  if (name == "tr") return OptimizerId::tr;
  if (name == "apts") return OptimizerId::apts;
  if (name == "iapts") return OptimizerId::iapts;
  throw std::invalid_argument("unknown optimizer: " + name);
}

std::string to_string(OptimizerId id) {
  switch (id) {
    case OptimizerId::adam: return "adam";
    case OptimizerId::sgd: return "sgd";
    case OptimizerId::tr: return "tr";
    case OptimizerId::apts: return "apts";
    case OptimizerId::iapts: return "iapts";
  }
  return "?";
}

MlpSpec RunConfig::model_spec() const {
  std::string sizes = model;
  if (sizes.empty()) sizes = dataset == DatasetId::two_moons ? "2-16-16-2" : "784-32-32-10";
  return MlpSpec::parse(sizes, activation, head);
}

void RunConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (dataset == DatasetId::mnist_idx && (images.empty() || labels.empty())) {
    throw ConfigError("dataset mnist_idx needs both images and labels paths");
  }
  if (dataset == DatasetId::two_moons && dataset_size == 0) throw ConfigError("dataset_size must be positive");
  if (!(validation_split >= 0.0 && validation_split < 1.0)) throw ConfigError("validation_split must be in [0, 1)");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(delta_init > 0.0)) throw ConfigError("delta_init must be positive");
  MlpSpec spec;
  try {
    spec = model_spec();
    spec.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  apts.validate();
  iapts.validate();
  const bool layer_split = optimizer == OptimizerId::iapts ||
                           (optimizer == OptimizerId::apts && apts.partition_strategy == PartitionStrategy::layer_blocks);
  const std::size_t parts = optimizer == OptimizerId::iapts ? iapts.subdomain_count : apts.subdomain_count;
  if (layer_split && parts > spec.layer_count()) {
    throw ConfigError("subdomain_count exceeds the model's layer count of " + std::to_string(spec.layer_count()));
  }
}

RunConfig parse_config_text(const std::string& text, const std::string& source) {
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  const auto& keys = known_keys();
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(source, line, line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) fail(source, key, line_no, "unknown key");
    if (entries.count(key)) fail(source, key, line_no, "duplicate key");
    if (value.empty()) fail(source, key, line_no, "missing value");
    entries[key] = {value, line_no};
  }

  Reader r(source, std::move(entries));
  for (const char* required : {"optimizer", "dataset"}) {
    if (!r.has(required)) {
      throw ConfigError(source + ": missing required key '" + std::string(required) + "'");
    }
  }

  RunConfig cfg;
  r.apply("optimizer", [&](const std::string& v) { cfg.optimizer = parse_optimizer(v); });
  if (cfg.optimizer == OptimizerId::sgd) cfg.lr = 0.1;
  r.apply("dataset", [&](const std::string& v) {
    if (v == "two_moons") cfg.dataset = DatasetId::two_moons;
    else if (v == "mnist_idx") cfg.dataset = DatasetId::mnist_idx;
    else throw std::invalid_argument("unknown dataset: " + v);
  });
  if (cfg.dataset == DatasetId::mnist_idx) cfg.dataset_size = 0;

  r.apply("model", [&](const std::string& v) {
    MlpSpec::parse(v, Activation::tanh, Activation::softmax_xent);
    cfg.model = v;
  });
  r.apply("activation", [&](const std::string& v) { cfg.activation = parse_activation(v); });
  r.apply("head", [&](const std::string& v) { cfg.head = parse_activation(v); });
  r.apply("dataset_size", [&](const std::string& v) { cfg.dataset_size = r.count(v); });
  r.apply("noise", [&](const std::string& v) { cfg.noise = r.number(v); });
  r.apply("data_seed", [&](const std::string& v) { cfg.data_seed = r.count(v); });
  r.apply("images", [&](const std::string& v) { cfg.images = v; });
  r.apply("labels", [&](const std::string& v) { cfg.labels = v; });
  r.apply("validation_split", [&](const std::string& v) { cfg.validation_split = r.number(v); });
  r.apply("batch_size", [&](const std::string& v) { cfg.batch_size = r.count(v); });
  r.apply("batch_mode", [&](const std::string& v) {
    if (v == "sequential") cfg.batch_mode = BatchMode::sequential;
    else if (v == "shuffled") cfg.batch_mode = BatchMode::shuffled;
    else if (v == "full") cfg.batch_mode = BatchMode::full;
    else throw std::invalid_argument("expected sequential, shuffled or full, got " + v);
  });
  r.apply("epochs", [&](const std::string& v) { cfg.epochs = r.count(v); });
  r.apply("seeds", [&](const std::string& v) {
    cfg.seeds.clear();
    std::istringstream list(v);
    std::string item;
    while (std::getline(list, item, ',')) cfg.seeds.push_back(r.count(trim(item)));
  });
  r.apply("output", [&](const std::string& v) { cfg.output = v; });
  r.apply("timing", [&](const std::string& v) {
    if (v == "wall") cfg.timing = Timing::wall;
    else if (v == "none") cfg.timing = Timing::none;
    else throw std::invalid_argument("expected wall or none, got " + v);
  });
  r.apply("lr", [&](const std::string& v) { cfg.lr = r.number(v); });
  r.apply("momentum", [&](const std::string& v) { cfg.momentum = r.number(v); });
  r.apply("delta_init", [&](const std::string& v) { cfg.delta_init = r.number(v); });

  r.apply("subdomain_count", [&](const std::string& v) { cfg.apts.subdomain_count = cfg.iapts.subdomain_count = r.count(v); });
  r.apply("global_tr_iters", [&](const std::string& v) { cfg.apts.global_tr_iters = cfg.iapts.global_tr_iters = r.count(v); });
  r.apply("inner_iters", [&](const std::string& v) { cfg.apts.inner_iters = r.count(v); });
  r.apply("local_solver", [&](const std::string& v) {
    if (v == "tr") cfg.apts.local_solver = LocalSolver::tr;
    else if (v == "cadam") cfg.apts.local_solver = LocalSolver::cadam;
    else throw std::invalid_argument("expected tr or cadam, got " + v);
  });
  r.apply("partition", [&](const std::string& v) {
    if (v == "even_blocks") cfg.apts.partition_strategy = PartitionStrategy::even_blocks;
    else if (v == "layer_blocks") cfg.apts.partition_strategy = PartitionStrategy::layer_blocks;
    else throw std::invalid_argument("expected even_blocks or layer_blocks, got " + v);
  });
  r.apply("local_hessian", [&](const std::string& v) { cfg.apts.local_hessian = parse_hessian(v); });
  r.apply("global_hessian", [&](const std::string& v) { cfg.apts.global_hessian = cfg.iapts.global_hessian = parse_hessian(v); });
  r.apply("tr_norm", [&](const std::string& v) {
    Norm n;
    if (v == "linf") n = Norm::Linf;
    else if (v == "l2") n = Norm::L2;
    else throw std::invalid_argument("expected linf or l2, got " + v);
    cfg.apts.tr.norm = cfg.iapts.tr.norm = n;
  });
  r.apply("eta1", [&](const std::string& v) { cfg.apts.tr.eta1 = cfg.iapts.tr.eta1 = r.number(v); });
  r.apply("eta2", [&](const std::string& v) { cfg.apts.tr.eta2 = cfg.iapts.tr.eta2 = r.number(v); });
  r.apply("gamma_dec", [&](const std::string& v) { cfg.apts.tr.gamma_dec = cfg.iapts.tr.gamma_dec = r.number(v); });
  r.apply("gamma_inc", [&](const std::string& v) { cfg.apts.tr.gamma_inc = cfg.iapts.tr.gamma_inc = r.number(v); });
  r.apply("delta_min", [&](const std::string& v) { cfg.apts.tr.delta_min = r.number(v); });
  r.apply("delta_max", [&](const std::string& v) { cfg.apts.tr.delta_max = r.number(v); });
  r.apply("feed_back_radius", [&](const std::string& v) {
    cfg.apts.feed_back_global_radius = cfg.iapts.feed_back_global_radius = r.flag(v);
  });
  r.apply("moments", [&](const std::string& v) {
    bool persist;
    if (v == "reset") persist = false;
    else if (v == "persist") persist = true;
    else throw std::invalid_argument("expected reset or persist, got " + v);
    cfg.apts.persist_moments = cfg.iapts.persist_moments = persist;
  });
  r.apply("parallel", [&](const std::string& v) { cfg.apts.parallel = cfg.iapts.parallel = r.flag(v); });
  r.apply("local_iters", [&](const std::string& v) { cfg.iapts.local_iters = r.count(v); });
  r.apply("lr_init", [&](const std::string& v) { cfg.iapts.lr_init = r.number(v); });
  r.apply("lr_min", [&](const std::string& v) { cfg.iapts.lr_min = r.number(v); });
  r.apply("lr_max", [&](const std::string& v) { cfg.iapts.lr_max = r.number(v); });

  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const auto& key : known_keys()) {
      if (r.has(key) && msg.rfind(key, 0) == 0) fail(source, key, r.line_of(key), msg);
    }
    throw ConfigError(source + ": " + msg);
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

}  // namespace apts
