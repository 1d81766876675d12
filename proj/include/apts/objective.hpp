#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "apts/numeric.hpp"

namespace apts {

/// Subset of dataset sample indices, or the whole dataset.
class BatchRef {
 public:
  static BatchRef full() { return BatchRef(); }
  /// Throws DomainError for an empty index list.
  static BatchRef of(std::vector<std::size_t> indices);

  bool is_full() const noexcept { return full_; }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  /// Number of samples selected out of a dataset of `dataset_size` rows.
  std::size_t count(std::size_t dataset_size) const noexcept { return full_ ? dataset_size : indices_.size(); }

  /// Throws RangeError if an index is outside [0, dataset_size).
  void validate(std::size_t dataset_size) const;

  friend bool operator==(const BatchRef&, const BatchRef&) = default;

 private:
  BatchRef() = default;
  bool full_ = true;
  std::vector<std::size_t> indices_;
};

struct Evaluation {
  double loss = 0.0;
  ParamVector grad;
};

/// Scalar objective with gradient. Implementations are deterministic and
/// safe to evaluate concurrently from several threads.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t dim() const = 0;
  virtual Evaluation evaluate(const ParamVector& theta, const BatchRef& batch) const = 0;
};

/// f(x) = 1/2 sum a_i x_i^2 - sum b_i x_i
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(ParamVector a_diag, ParamVector b);

  std::size_t dim() const override { return a_.size(); }
  Evaluation evaluate(const ParamVector& theta, const BatchRef& batch) const override;

  /// Minimizer b / a.
  ParamVector minimizer() const;

 private:
  ParamVector a_;
  ParamVector b_;
};

/// f(x, y) = 100 (y - x^2)^2 + (1 - x)^2
class RosenbrockObjective final : public Objective {
 public:
  std::size_t dim() const override { return 2; }
  Evaluation evaluate(const ParamVector& theta, const BatchRef& batch) const override;
};

/// Wraps an arbitrary callable; mainly for tests and ad hoc problems.
class FunctionObjective final : public Objective {
 public:
  using Fn = std::function<Evaluation(const ParamVector&, const BatchRef&)>;
  FunctionObjective(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}

  std::size_t dim() const override { return dim_; }
  Evaluation evaluate(const ParamVector& theta, const BatchRef& batch) const override;

 private:
  std::size_t dim_;
  Fn fn_;
};

std::unique_ptr<Objective> quadratic_objective(ParamVector a_diag, ParamVector b);
std::unique_ptr<Objective> rosenbrock_objective();

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
ParamVector finite_diff_grad(const Objective& obj, const ParamVector& theta, double h,
                             const BatchRef& batch = BatchRef::full());

}  // namespace apts
