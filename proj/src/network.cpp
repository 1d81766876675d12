#include "apts/network.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace apts {

namespace {

using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// Weights and biases are copied out of the flat vector so that every pass
// multiplies identically laid out operands regardless of where the
// parameters live. `shift` is subtracted from the slice offsets when `base`
// points at a block rather than at the full parameter vector.
Matrix load_weights(const double* base, const LayerSlice& s, std::size_t out, std::size_t in, std::size_t shift = 0) {
  return Eigen::Map<const Matrix>(base + (s.weight_offset - shift), static_cast<Eigen::Index>(out),
                                  static_cast<Eigen::Index>(in));
}

RowVector load_bias(const double* base, const LayerSlice& s, std::size_t shift = 0) {
  return Eigen::Map<const RowVector>(base + (s.bias_offset - shift), static_cast<Eigen::Index>(s.bias_len));
}

Matrix affine(const Matrix& a, const Matrix& w, const RowVector& b) {
  Matrix z = a * w.transpose();
  z.rowwise() += b;
  return z;
}

Matrix activate(const Matrix& z, Activation act) {
  switch (act) {
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::relu: return z.array().max(0.0).matrix();
    case Activation::identity:
    case Activation::softmax_xent: return z;
  }
  return z;
}

// dH/dZ elementwise for hidden activations, given Z and H = act(Z).
Matrix activation_grad(const Matrix& z, const Matrix& h, Activation act) {
  switch (act) {
    case Activation::tanh: return (1.0 - h.array().square()).matrix();
    case Activation::relu: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::identity:
    case Activation::softmax_xent: return Matrix::Ones(z.rows(), z.cols());
  }
  return Matrix::Ones(z.rows(), z.cols());
}

Matrix softmax_rows(const Matrix& z) {
  Matrix p(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double mx = z.row(r).maxCoeff();
    const RowVector e = (z.row(r).array() - mx).exp().matrix();
    p.row(r) = e / e.sum();
  }
  return p;
}

Matrix dense_targets(const Targets& targets, Eigen::Index rows, Eigen::Index cols) {
  if (const auto* m = std::get_if<Matrix>(&targets)) {
    if (m->rows() != rows || m->cols() != cols) throw DimensionError("targets shape differs from network output");
    return *m;
  }
  const auto& labels = std::get<std::vector<int>>(targets);
  if (static_cast<Eigen::Index>(labels.size()) != rows) throw DimensionError("label count differs from batch size");
  Matrix y = Matrix::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int l = labels[static_cast<std::size_t>(r)];
    if (l < 0 || l >= cols) throw DomainError("label out of range for network output");
    y(r, l) = 1.0;
  }
  return y;
}

// Mean loss of output pre-activations and, optionally, df/dZ.
double head_loss(const Matrix& z, const Targets& targets, Activation head, Matrix* grad) {
  const auto batch = static_cast<double>(z.rows());
  const Matrix y = dense_targets(targets, z.rows(), z.cols());
  double total = 0.0;
  if (head == Activation::softmax_xent) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      const double mx = z.row(r).maxCoeff();
      const double lse = mx + std::log((z.row(r).array() - mx).exp().sum());
      total += -(y.row(r).array() * (z.row(r).array() - lse)).sum();
    }
    if (grad) {
      const Matrix p = softmax_rows(z);
      const Eigen::VectorXd mass = y.rowwise().sum();
      *grad = (p.array().colwise() * mass.array() - y.array()).matrix() / batch;
    }
  } else {
    const Matrix diff = z - y;
    for (Eigen::Index r = 0; r < z.rows(); ++r) total += 0.5 * diff.row(r).squaredNorm();
    if (grad) *grad = diff / batch;
  }
  return total / batch;
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "softmax_xent" || name == "softmax") return Activation::softmax_xent;
  throw DomainError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::softmax_xent: return "softmax_xent";
  }
  return "?";
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 3) throw DomainError("MlpSpec: need at least one hidden layer");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw DomainError("MlpSpec: layer sizes must be positive");
  }
  if (activations.size() != layer_count()) throw DomainError("MlpSpec: one activation per layer required");
  for (std::size_t i = 0; i + 1 < activations.size(); ++i) {
    if (activations[i] == Activation::softmax_xent) throw DomainError("MlpSpec: softmax head only on the output layer");
  }
  const auto head = activations.back();
  if (head != Activation::identity && head != Activation::softmax_xent) {
    throw DomainError("MlpSpec: output layer must be identity (squared error) or softmax_xent");
  }
}

MlpSpec MlpSpec::parse(const std::string& sizes, Activation hidden, Activation head) {
  MlpSpec spec;
  std::stringstream ss(sizes);
  std::string part;
  while (std::getline(ss, part, '-')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(part, &used);
      if (used != part.size() || v <= 0) throw std::invalid_argument(part);
      spec.layer_sizes.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw DomainError("MlpSpec: bad layer size '" + part + "' in '" + sizes + "'");
    }
  }
  if (spec.layer_sizes.size() >= 2) {
    spec.activations.assign(spec.layer_sizes.size() - 1, hidden);
    spec.activations.back() = head;
  }
  spec.validate();
  return spec;
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < spec_.layer_count(); ++i) {
    LayerSlice s;
    s.layer_index = i;
    s.weight_offset = offset;
    s.weight_len = spec_.layer_sizes[i] * spec_.layer_sizes[i + 1];
    s.bias_offset = offset + s.weight_len;
    s.bias_len = spec_.layer_sizes[i + 1];
    offset = s.end();
    slices_.push_back(s);
  }
  parameter_count_ = offset;
}

ParamVector Mlp::init_parameters(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  ParamVector theta(parameter_count_);
  for (const auto& s : slices_) {
    const double fan_in = static_cast<double>(spec_.layer_sizes[s.layer_index]);
    const double fan_out = static_cast<double>(spec_.layer_sizes[s.layer_index + 1]);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t k = 0; k < s.weight_len; ++k) theta[s.weight_offset + k] = dist(rng);
  }
  return theta;
}

Matrix Mlp::forward(const ParamVector& theta, const Matrix& inputs, LayerCache& cache) const {
  require_same_size(theta.size(), parameter_count_, "Mlp::forward parameters");
  if (static_cast<std::size_t>(inputs.cols()) != input_dim()) {
    throw DimensionError("Mlp::forward: input has " + std::to_string(inputs.cols()) + " columns, expected " +
                         std::to_string(input_dim()));
  }
  cache = LayerCache{};
  cache.theta = theta;
  cache.inputs.reserve(layer_count());
  cache.pre_activations.reserve(layer_count());
  cache.inputs.push_back(inputs);
  for (const auto& s : slices_) {
    const std::size_t i = s.layer_index;
    const Matrix w = load_weights(theta.data(), s, spec_.layer_sizes[i + 1], spec_.layer_sizes[i]);
    Matrix z = affine(cache.inputs.back(), w, load_bias(theta.data(), s));
    if (i + 1 < layer_count()) {
      cache.inputs.push_back(activate(z, spec_.activations[i]));
    }
    cache.pre_activations.push_back(std::move(z));
  }
  cache.output = cache.pre_activations.back();
  return spec_.activations.back() == Activation::softmax_xent ? softmax_rows(cache.output) : cache.output;
}

Matrix Mlp::predict(const ParamVector& theta, const Matrix& inputs) const {
  LayerCache cache;
  return forward(theta, inputs, cache);
}

double Mlp::loss(const Matrix& outputs_pre, const Targets& targets) const {
  return head_loss(outputs_pre, targets, spec_.activations.back(), nullptr);
}

BackwardResult Mlp::backward(LayerCache& cache, const Targets& targets) const {
  if (!cache.has_forward()) throw StateError("Mlp::backward called without a forward pass");
  const std::size_t layers = layer_count();
  BackwardResult out{0.0, ParamVector(parameter_count_)};

  Matrix g;
  out.loss = head_loss(cache.output, targets, spec_.activations.back(), &g);
  cache.targets = targets;
  cache.downstream.assign(layers, Matrix{});

  Matrix dz = g;
  for (std::size_t i = layers; i-- > 0;) {
    const auto& s = slices_[i];
    cache.downstream[i] = std::move(g);
    Eigen::Map<Matrix>(out.grad.data() + s.weight_offset, static_cast<Eigen::Index>(spec_.layer_sizes[i + 1]),
                       static_cast<Eigen::Index>(spec_.layer_sizes[i])) = dz.transpose() * cache.inputs[i];
    Eigen::Map<RowVector>(out.grad.data() + s.bias_offset, static_cast<Eigen::Index>(s.bias_len)) =
        dz.colwise().sum();
    if (i == 0) break;
    const Matrix w = load_weights(cache.theta.data(), s, spec_.layer_sizes[i + 1], spec_.layer_sizes[i]);
    g = dz * w;
    dz = g.cwiseProduct(activation_grad(cache.pre_activations[i - 1], cache.inputs[i], spec_.activations[i - 1]));
  }
  return out;
}

std::pair<std::size_t, std::size_t> Mlp::block_range(std::size_t first, std::size_t last) const {
  if (first > last || last >= layer_count()) throw RangeError("layer block out of range");
  return {slices_[first].begin(), slices_[last].end() - slices_[first].begin()};
}

ParamVector Mlp::local_grad_from_cache(std::span<const double> block_params, const LayerCache& cache,
                                       std::size_t first, std::size_t last) const {
  if (!cache.has_backward()) throw StateError("local_grad_from_cache needs a cache from a full forward/backward pass");
  const auto [offset, len] = block_range(first, last);
  require_same_size(block_params.size(), len, "local_grad_from_cache block parameters");
  const double* base = block_params.data();

  std::vector<Matrix> inputs{cache.inputs[first]};
  std::vector<Matrix> pre;
  for (std::size_t i = first; i <= last; ++i) {
    const auto& s = slices_[i];
    const Matrix w = load_weights(base, s, spec_.layer_sizes[i + 1], spec_.layer_sizes[i], offset);
    Matrix z = affine(inputs.back(), w, load_bias(base, s, offset));
    inputs.push_back(activate(z, spec_.activations[i]));
    pre.push_back(std::move(z));
  }

  Matrix g;
  if (last + 1 == layer_count()) {
    head_loss(pre.back(), cache.targets, spec_.activations.back(), &g);
  } else {
    g = cache.downstream[last];
  }

  ParamVector grad(len);
  for (std::size_t i = last + 1; i-- > first;) {
    const auto& s = slices_[i];
    const std::size_t k = i - first;
    const Matrix dz = (i + 1 == layer_count())
                          ? g
                          : Matrix(g.cwiseProduct(activation_grad(pre[k], inputs[k + 1], spec_.activations[i])));
    Eigen::Map<Matrix>(grad.data() + (s.weight_offset - offset), static_cast<Eigen::Index>(spec_.layer_sizes[i + 1]),
                       static_cast<Eigen::Index>(spec_.layer_sizes[i])) = dz.transpose() * inputs[k];
    Eigen::Map<RowVector>(grad.data() + (s.bias_offset - offset), static_cast<Eigen::Index>(s.bias_len)) =
        dz.colwise().sum();
    if (i == first) break;
    const Matrix w = load_weights(base, s, spec_.layer_sizes[i + 1], spec_.layer_sizes[i], offset);
    g = dz * w;
  }
  return grad;
}

ParamVector Mlp::local_grad_from_cache(std::span<const double> block_params, const LayerCache& cache,
                                       const std::vector<std::size_t>& layers) const {
  if (layers.empty()) throw DomainError("local_grad_from_cache: empty layer set");
  for (std::size_t k = 1; k < layers.size(); ++k) {
    if (layers[k] != layers[k - 1] + 1) throw DomainError("local_grad_from_cache: layer set is not contiguous");
  }
  return local_grad_from_cache(block_params, cache, layers.front(), layers.back());
}

double accuracy(const Matrix& predictions, const std::vector<int>& labels) {
  require_same_size(static_cast<std::size_t>(predictions.rows()), labels.size(), "accuracy");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (Eigen::Index r = 0; r < predictions.rows(); ++r) {
    Eigen::Index best = 0;
    predictions.row(r).maxCoeff(&best);
    if (best == labels[static_cast<std::size_t>(r)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

NetworkObjective::NetworkObjective(std::shared_ptr<const Mlp> model, std::shared_ptr<const Dataset> data)
    : model_(std::move(model)), data_(std::move(data)) {
  data_->validate();
  if (data_->input_dim() != model_->input_dim()) throw DimensionError("network input width differs from dataset");
  if (data_->is_classification() && data_->classes != model_->output_dim()) {
    throw DimensionError("network output width differs from class count");
  }
}

Targets NetworkObjective::targets(const BatchRef& batch) const {
  if (data_->is_classification()) return gather_labels(data_->labels, batch);
  return gather_rows(data_->targets, batch);
}

Evaluation NetworkObjective::evaluate_with_cache(const ParamVector& theta, const BatchRef& batch,
                                                 LayerCache& cache) const {
  batch.validate(data_->size());
  model_->forward(theta, gather_rows(data_->inputs, batch), cache);
  auto result = model_->backward(cache, targets(batch));
  return {result.loss, std::move(result.grad)};
}

Evaluation NetworkObjective::evaluate(const ParamVector& theta, const BatchRef& batch) const {
  LayerCache cache;
  return evaluate_with_cache(theta, batch, cache);
}

std::pair<double, double> NetworkObjective::loss_and_accuracy(const ParamVector& theta, const BatchRef& batch) const {
  batch.validate(data_->size());
  LayerCache cache;
  const Matrix pred = model_->forward(theta, gather_rows(data_->inputs, batch), cache);
  const auto t = targets(batch);
  const double l = model_->loss(cache.output, t);
  const double acc = data_->is_classification() ? accuracy(pred, std::get<std::vector<int>>(t)) : 0.0;
  return {l, acc};
}

}  // namespace apts
