#include "apts/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>

#include "apts/baselines.hpp"

namespace apts {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class Trainer {
 public:
  virtual ~Trainer() = default;
  /// One optimizer step on the batch; returns whether it was accepted.
  virtual bool step(const BatchRef& batch) = 0;
  virtual const ParamVector& theta() const = 0;
  virtual double delta() const { return 0.0; }
};

class AdamTrainer final : public Trainer {
 public:
  AdamTrainer(const Objective& obj, ParamVector theta0, double lr)
      : obj_(obj), theta_(std::move(theta0)), adam_(theta_.size(), lr) {}
  bool step(const BatchRef& batch) override {
    theta_ += adam_.step(obj_.evaluate(theta_, batch).grad);
    return true;
  }
  const ParamVector& theta() const override { return theta_; }

 private:
  const Objective& obj_;
  ParamVector theta_;
  AdamOptimizer adam_;
};

class SgdTrainer final : public Trainer {
 public:
  SgdTrainer(const Objective& obj, ParamVector theta0, double lr, double momentum)
      : obj_(obj), theta_(std::move(theta0)), sgd_(theta_.size(), lr, momentum) {}
  bool step(const BatchRef& batch) override {
    theta_ += sgd_.step(obj_.evaluate(theta_, batch).grad);
    return true;
  }
  const ParamVector& theta() const override { return theta_; }

 private:
  const Objective& obj_;
  ParamVector theta_;
  SgdMomentum sgd_;
};

class TrTrainer final : public Trainer {
 public:
  TrTrainer(const Objective& obj, ParamVector theta0, double delta0, TrParams params, HessianKind hessian)
      : obj_(obj),
        params_(params),
        theta_(std::move(theta0)),
        delta_(delta0),
        hessian_(hessian == HessianKind::lbfgs ? HessianProxy::lbfgs() : HessianProxy::identity()) {}
  bool step(const BatchRef& batch) override {
    TrState s = make_tr_state(obj_, theta_, delta_, batch, std::move(hessian_));
    s = tr_step(obj_, s, params_, batch);
    theta_ = std::move(s.theta);
    delta_ = s.delta;
    hessian_ = std::move(s.hessian);
    return s.history.back().accepted;
  }
  const ParamVector& theta() const override { return theta_; }
  double delta() const override { return delta_; }

 private:
  const Objective& obj_;
  TrParams params_;
  ParamVector theta_;
  double delta_;
  HessianProxy hessian_;
};

class AptsTrainer final : public Trainer {
 public:
  AptsTrainer(const NetworkObjective& obj, ParamVector theta0, double delta0, const AptsConfig& cfg)
      : opt_(obj, make_partition(obj.model(), cfg), cfg, std::move(theta0), delta0) {}
  bool step(const BatchRef& batch) override { return opt_.iterate(batch).accepted; }
  const ParamVector& theta() const override { return opt_.theta(); }
  double delta() const override { return opt_.delta(); }

 private:
  static Partition make_partition(const Mlp& net, const AptsConfig& cfg) {
    if (cfg.partition_strategy == PartitionStrategy::layer_blocks) {
      return make_layer_partition(net.slices(), cfg.subdomain_count);
    }
    return make_even_partition(net.parameter_count(), cfg.subdomain_count);
  }
  AptsOptimizer opt_;
};

class IaptsTrainer final : public Trainer {
 public:
  IaptsTrainer(const NetworkObjective& obj, ParamVector theta0, const IaptsConfig& cfg)
      : opt_(obj, cfg, std::move(theta0)) {}
  bool step(const BatchRef& batch) override { return opt_.iterate(batch).accepted; }
  const ParamVector& theta() const override { return opt_.theta(); }
  double delta() const override { return opt_.delta(); }

 private:
  IaptsOptimizer opt_;
};

std::unique_ptr<Trainer> make_trainer(const RunConfig& cfg, const NetworkObjective& obj, ParamVector theta0) {
  switch (cfg.optimizer) {
    case OptimizerId::adam: return std::make_unique<AdamTrainer>(obj, std::move(theta0), cfg.lr);
    case OptimizerId::sgd: return std::make_unique<SgdTrainer>(obj, std::move(theta0), cfg.lr, cfg.momentum);
    case OptimizerId::tr:
      return std::make_unique<TrTrainer>(obj, std::move(theta0), cfg.delta_init, cfg.apts.tr, cfg.apts.global_hessian);
    case OptimizerId::apts: return std::make_unique<AptsTrainer>(obj, std::move(theta0), cfg.delta_init, cfg.apts);
    case OptimizerId::iapts: return std::make_unique<IaptsTrainer>(obj, std::move(theta0), cfg.iapts);
  }
  throw ConfigError("unknown optimizer");
}

Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.dataset == DatasetId::two_moons) return two_moons(cfg.dataset_size, cfg.noise, cfg.data_seed);
  Dataset ds = load_idx(cfg.images, cfg.labels);
  if (cfg.dataset_size > 0) ds = head(ds, cfg.dataset_size);
  return ds;
}

void write_csv(const RunConfig& cfg, const std::vector<MetricsRow>& rows, const std::string* error_row) {
  std::ofstream out(cfg.output, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open output file " + cfg.output.string());
  const bool val = cfg.validation_split > 0.0;
  out << kCsvHeader << (val ? ",val_loss,val_accuracy" : "") << '\n';
  for (const auto& r : rows) out << format_row(r, val) << '\n';
  if (error_row) out << *error_row << '\n';
  out.flush();
  if (!out) throw Error("failed writing " + cfg.output.string());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_row(const MetricsRow& r, bool with_validation) {
  std::string s = r.seed + ',' + std::to_string(r.epoch) + ',' + num(r.train_loss) + ',' + num(r.train_accuracy) +
                  ',' + num(r.delta_g) + ',' + num(r.accepted_ratio) + ',' + num(r.wall_time_s);
  if (with_validation) s += ',' + num(r.val_loss) + ',' + num(r.val_accuracy);
  return s;
}

ExperimentResult run_experiment(const RunConfig& cfg) {
  cfg.validate();
  ExperimentResult result;

  Dataset full = load_dataset(cfg);
  std::shared_ptr<const Dataset> train;
  std::shared_ptr<const Dataset> val;
  if (cfg.validation_split > 0.0) {
    auto [tr, va] = split_tail(full, cfg.validation_split);
    train = std::make_shared<const Dataset>(std::move(tr));
    val = std::make_shared<const Dataset>(std::move(va));
  } else {
    train = std::make_shared<const Dataset>(std::move(full));
  }
  const auto model = std::make_shared<const Mlp>(cfg.model_spec());
  const NetworkObjective obj(model, train);
  std::unique_ptr<NetworkObjective> val_obj;
  if (val) val_obj = std::make_unique<NetworkObjective>(model, val);

  const std::size_t m = train->size();
  BatchSchedule sched;
  sched.batch_size = cfg.batch_size == 0 ? m : std::min(cfg.batch_size, m);
  sched.mode = cfg.batch_size == 0 ? BatchMode::full : cfg.batch_mode;

  std::size_t failed_epoch = 0;
  try {
    for (const auto seed : cfg.seeds) {
      const auto start = std::chrono::steady_clock::now();
      auto trainer = make_trainer(cfg, obj, model->init_parameters(seed));
      sched.seed = seed;

      auto record = [&](std::size_t epoch, double accepted_ratio) {
        MetricsRow row;
        row.seed = std::to_string(seed);
        row.epoch = epoch;
        std::tie(row.train_loss, row.train_accuracy) = obj.loss_and_accuracy(trainer->theta(), BatchRef::full());
        if (val_obj) std::tie(row.val_loss, row.val_accuracy) = val_obj->loss_and_accuracy(trainer->theta(), BatchRef::full());
        row.delta_g = trainer->delta();
        row.accepted_ratio = accepted_ratio;
        if (cfg.timing == Timing::wall) {
          row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
        result.rows.push_back(row);
      };

      failed_epoch = 0;
      record(0, 0.0);
      for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        failed_epoch = epoch;
        std::size_t accepted = 0;
        const auto plan = batches(m, sched, epoch);
        for (const auto& b : plan) accepted += trainer->step(b) ? 1 : 0;
        record(epoch, static_cast<double>(accepted) / static_cast<double>(plan.size()));
      }
    }
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
    const std::string marker = "error," + std::to_string(failed_epoch) + ",nan,nan,nan,nan,nan";
    write_csv(cfg, result.rows, &marker);
    result.summary = "optimizer=" + to_string(cfg.optimizer) + " status=error message=" + result.error;
    return result;
  }

  const double runs = static_cast<double>(cfg.seeds.size());
  const std::size_t per_seed = cfg.epochs + 1;
  for (std::size_t e = 0; e < per_seed; ++e) {
    MetricsRow mean;
    mean.seed = "mean";
    mean.epoch = e;
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
      const auto& r = result.rows[s * per_seed + e];
      mean.train_loss += r.train_loss / runs;
      mean.train_accuracy += r.train_accuracy / runs;
      mean.delta_g += r.delta_g / runs;
      mean.accepted_ratio += r.accepted_ratio / runs;
      mean.wall_time_s += r.wall_time_s / runs;
      mean.val_loss += r.val_loss / runs;
      mean.val_accuracy += r.val_accuracy / runs;
    }
    result.rows.push_back(mean);
  }
  write_csv(cfg, result.rows, nullptr);

  const auto& last = result.rows.back();
  result.summary = "optimizer=" + to_string(cfg.optimizer) + " seeds=" + std::to_string(cfg.seeds.size()) +
                   " epochs=" + std::to_string(cfg.epochs) + " final_mean_loss=" + num(last.train_loss) +
                   " final_mean_accuracy=" + num(last.train_accuracy) + " output=" + cfg.output.string();
  return result;
}

CompareReport compare_report(const std::vector<std::filesystem::path>& csv_paths) {
  if (csv_paths.size() < 2) throw DomainError("compare needs at least two CSV files");
  const std::string header = kCsvHeader;
  std::vector<std::map<std::size_t, std::pair<double, double>>> means;

  for (const auto& path : csv_paths) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind(header, 0) != 0) throw FormatError(path.string() + ": missing CSV header");
    std::map<std::size_t, std::pair<double, double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      const auto cells = split_csv(line);
      if (cells.size() < 7) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": short row");
      if (cells[0] != "mean") continue;
      try {
        rows[std::stoul(cells[1])] = {std::stod(cells[2]), std::stod(cells[3])};
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": unparsable row");
      }
    }
    if (rows.empty()) throw FormatError(path.string() + ": no mean rows");
    means.push_back(std::move(rows));
  }

  for (std::size_t f = 1; f < means.size(); ++f) {
    bool same = means[f].size() == means[0].size();
    for (auto a = means[0].begin(), b = means[f].begin(); same && a != means[0].end(); ++a, ++b) same = a->first == b->first;
    if (!same) {
      throw AlignmentError("epoch grid of " + csv_paths[f].string() + " differs from " + csv_paths[0].string());
    }
  }

  CompareReport report;
  report.crossing_epoch.assign(means.size(), -1);
  std::ostringstream t;
  t << "epoch";
  for (const auto& p : csv_paths) t << " | " << p.filename().string() << " loss acc";
  t << '\n';
  for (const auto& [epoch, first] : means[0]) {
    t << epoch;
    for (std::size_t f = 0; f < means.size(); ++f) {
      const auto [loss, acc] = means[f].at(epoch);
      t << " | " << num(loss) << ' ' << num(acc);
      if (f > 0) report.differences += (loss != first.first) + (acc != first.second);
      if (acc >= 0.9 && report.crossing_epoch[f] < 0) report.crossing_epoch[f] = static_cast<long>(epoch);
    }
    t << '\n';
  }
  t << "differences from " << csv_paths[0].filename().string() << ": " << report.differences << '\n';
  for (std::size_t f = 0; f < means.size(); ++f) {
    t << "first epoch >= 90% accuracy, " << csv_paths[f].filename().string() << ": ";
    if (report.crossing_epoch[f] < 0) t << "never\n";
    else t << report.crossing_epoch[f] << '\n';
  }
  report.table = t.str();
  return report;
}

double gradient_check(const std::string& model, std::uint64_t seed, std::ostream* log) {
  const auto spec = MlpSpec::parse(model, Activation::tanh, Activation::softmax_xent);
  const auto net = std::make_shared<const Mlp>(spec);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, static_cast<int>(net->output_dim()) - 1);
  auto data = std::make_shared<Dataset>();
  data->name = "gradcheck";
  data->classes = net->output_dim();
  const Eigen::Index samples = 8;
  data->inputs.resize(samples, static_cast<Eigen::Index>(net->input_dim()));
  for (Eigen::Index i = 0; i < data->inputs.size(); ++i) data->inputs.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < samples; ++i) data->labels.push_back(label(rng));

  const NetworkObjective obj(net, data);
  ParamVector theta = net->init_parameters(seed);
  for (auto& v : theta) v += 0.1 * normal(rng);

  const ParamVector g = obj.evaluate(theta, BatchRef::full()).grad;
  const ParamVector fd = finite_diff_grad(obj, theta, 1e-6);
  const double scale = std::max({norm(g, Norm::L2), norm(fd, Norm::L2), 1e-12});
  const double err = norm(g - fd, Norm::L2) / scale;
  if (log) {
    *log << "model=" << model << " params=" << net->parameter_count() << " |grad|=" << num(norm(g, Norm::L2))
         << " relative_error=" << num(err) << '\n';
  }
  return err;
}

}  // namespace apts
