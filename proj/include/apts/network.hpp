#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "apts/data.hpp"
#include "apts/matrix.hpp"
#include "apts/numeric.hpp"
#include "apts/objective.hpp"

namespace apts {

/// `softmax_xent` is the fused softmax + cross-entropy head and may only
/// appear on the output layer. An `identity` output layer is paired with
/// the mean squared-error head 1/B sum 1/2 |y_hat - y|^2.
enum class Activation { identity, tanh, relu, softmax_xent };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

struct MlpSpec {
  std::vector<std::size_t> layer_sizes;  // [input, hidden..., output]
  std::vector<Activation> activations;   // one per layer, layer_sizes.size() - 1 entries

  std::size_t layer_count() const noexcept { return layer_sizes.empty() ? 0 : layer_sizes.size() - 1; }
  /// Throws DomainError when the spec is malformed.
  void validate() const;

  /// Builds e.g. "2-16-16-2" with `hidden` activations and the given head.
  static MlpSpec parse(const std::string& sizes, Activation hidden, Activation head);
};

/// Location of one layer's weights (row-major, out x in) and biases in the
/// flat parameter vector.
struct LayerSlice {
  std::size_t layer_index = 0;
  std::size_t weight_offset = 0;
  std::size_t weight_len = 0;
  std::size_t bias_offset = 0;
  std::size_t bias_len = 0;

  std::size_t begin() const noexcept { return weight_offset; }
  std::size_t end() const noexcept { return bias_offset + bias_len; }
  std::size_t size() const noexcept { return weight_len + bias_len; }
};

/// Class labels or dense target rows. With the softmax head dense rows are
/// read as target distributions; with the squared-error head labels are
/// one-hot encoded.
using Targets = std::variant<std::vector<int>, Matrix>;

/// Activations and downstream gradients recorded by a global pass.
///
/// `inputs[i]` is the activation entering layer i (inputs[0] is the batch).
/// `downstream[i]` is df/dH_i, the gradient with respect to the output of
/// layer i; for the output layer it is the gradient with respect to the
/// pre-activation, i.e. the loss-head gradient. All tensors are owned
/// copies.
struct LayerCache {
  ParamVector theta;
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre_activations;
  Matrix output;
  std::vector<Matrix> downstream;
  Targets targets;

  bool has_forward() const noexcept { return !inputs.empty(); }
  bool has_backward() const noexcept { return !downstream.empty(); }
  std::size_t batch_size() const noexcept { return inputs.empty() ? 0 : static_cast<std::size_t>(inputs[0].rows()); }
};

struct BackwardResult {
  double loss = 0.0;
  ParamVector grad;
};

/// Multilayer perceptron over a flat parameter vector with layers packed
/// in order W_0, b_0, W_1, b_1, ...
class Mlp {
 public:
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const noexcept { return spec_; }
  std::size_t layer_count() const noexcept { return slices_.size(); }
  std::size_t parameter_count() const noexcept { return parameter_count_; }
  const std::vector<LayerSlice>& slices() const noexcept { return slices_; }
  std::size_t input_dim() const noexcept { return spec_.layer_sizes.front(); }
  std::size_t output_dim() const noexcept { return spec_.layer_sizes.back(); }

  /// Glorot-uniform weights, zero biases.
  ParamVector init_parameters(std::uint64_t seed) const;

  /// Predictions are class probabilities for the softmax head and raw
  /// outputs otherwise. The returned cache holds every layer input.
  Matrix forward(const ParamVector& theta, const Matrix& inputs, LayerCache& cache) const;
  Matrix predict(const ParamVector& theta, const Matrix& inputs) const;

  /// Mean loss over the cached batch and its gradient; fills
  /// `cache.downstream` and `cache.targets`. Throws StateError without a
  /// prior forward pass.
  BackwardResult backward(LayerCache& cache, const Targets& targets) const;

  /// Approximate gradient for the contiguous layer block [first, last]
  /// evaluated at `block_params` (the block's slice of the parameter
  /// vector). The block input comes from `cache.inputs[first]`; the
  /// downstream gradient after the block is the cached df/dH_last and is
  /// held fixed. A block that ends at the output layer recomputes the
  /// loss-head gradient from the cached targets instead.
  ParamVector local_grad_from_cache(std::span<const double> block_params, const LayerCache& cache, std::size_t first,
                                    std::size_t last) const;
  /// Same, with an explicit layer list. Throws DomainError unless the list
  /// is a nonempty ascending run of consecutive layer indices.
  ParamVector local_grad_from_cache(std::span<const double> block_params, const LayerCache& cache,
                                    const std::vector<std::size_t>& layers) const;

  /// Offset and length of the parameters of layers [first, last].
  std::pair<std::size_t, std::size_t> block_range(std::size_t first, std::size_t last) const;

  /// Mean loss only.
  double loss(const Matrix& outputs_pre, const Targets& targets) const;

 private:
  MlpSpec spec_;
  std::vector<LayerSlice> slices_;
  std::size_t parameter_count_ = 0;
};

double accuracy(const Matrix& predictions, const std::vector<int>& labels);

/// Loss of an Mlp on a dataset as an Objective over the flat parameters.
class NetworkObjective final : public Objective {
 public:
  NetworkObjective(std::shared_ptr<const Mlp> model, std::shared_ptr<const Dataset> data);

  std::size_t dim() const override { return model_->parameter_count(); }
  Evaluation evaluate(const ParamVector& theta, const BatchRef& batch) const override;

  /// Forward + backward on the batch, returning the populated cache.
  Evaluation evaluate_with_cache(const ParamVector& theta, const BatchRef& batch, LayerCache& cache) const;

  /// Loss and accuracy (0 for regression) over the batch without gradients.
  std::pair<double, double> loss_and_accuracy(const ParamVector& theta, const BatchRef& batch) const;

  const Mlp& model() const noexcept { return *model_; }
  const Dataset& data() const noexcept { return *data_; }
  Targets targets(const BatchRef& batch) const;

 private:
  std::shared_ptr<const Mlp> model_;
  std::shared_ptr<const Dataset> data_;
};

}  // namespace apts
