#include "apts/objective.hpp"

#include <string>

namespace apts {

BatchRef BatchRef::of(std::vector<std::size_t> indices) {
  if (indices.empty()) throw DomainError("batch must select at least one sample");
  BatchRef b;
  b.full_ = false;
  b.indices_ = std::move(indices);
  return b;
}

void BatchRef::validate(std::size_t dataset_size) const {
  if (full_) return;
  for (std::size_t i : indices_) {
    if (i >= dataset_size) {
      throw RangeError("batch index " + std::to_string(i) + " outside dataset of size " +
                       std::to_string(dataset_size));
    }
  }
}

QuadraticObjective::QuadraticObjective(ParamVector a_diag, ParamVector b)
    : a_(std::move(a_diag)), b_(std::move(b)) {
  require_same_size(a_.size(), b_.size(), "quadratic_objective");
  for (double a : a_) {
    if (!(a > 0.0)) throw DomainError("quadratic_objective: diagonal entries must be positive");
  }
}

Evaluation QuadraticObjective::evaluate(const ParamVector& theta, const BatchRef&) const {
  require_same_size(theta.size(), a_.size(), "quadratic_objective");
  Evaluation out{0.0, ParamVector(theta.size())};
  for (std::size_t i = 0; i < theta.size(); ++i) {
    out.loss += 0.5 * a_[i] * theta[i] * theta[i] - b_[i] * theta[i];
    out.grad[i] = a_[i] * theta[i] - b_[i];
  }
  return out;
}

ParamVector QuadraticObjective::minimizer() const {
  ParamVector x(a_.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = b_[i] / a_[i];
  return x;
}

Evaluation RosenbrockObjective::evaluate(const ParamVector& theta, const BatchRef&) const {
  require_same_size(theta.size(), 2, "rosenbrock_objective");
  const double x = theta[0];
  const double y = theta[1];
  const double r = y - x * x;
  Evaluation out{100.0 * r * r + (1.0 - x) * (1.0 - x), ParamVector(2)};
  out.grad[0] = -400.0 * x * r - 2.0 * (1.0 - x);
  out.grad[1] = 200.0 * r;
  return out;
}

Evaluation FunctionObjective::evaluate(const ParamVector& theta, const BatchRef& batch) const {
  require_same_size(theta.size(), dim_, "function_objective");
  return fn_(theta, batch);
}

std::unique_ptr<Objective> quadratic_objective(ParamVector a_diag, ParamVector b) {
  return std::make_unique<QuadraticObjective>(std::move(a_diag), std::move(b));
}

std::unique_ptr<Objective> rosenbrock_objective() { return std::make_unique<RosenbrockObjective>(); }

ParamVector finite_diff_grad(const Objective& obj, const ParamVector& theta, double h, const BatchRef& batch) {
  if (!(h > 0.0)) throw DomainError("finite_diff_grad: step must be positive");
  ParamVector grad(theta.size());
  ParamVector probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double up = obj.evaluate(probe, batch).loss;
    probe[i] = theta[i] - h;
    const double down = obj.evaluate(probe, batch).loss;
    probe[i] = theta[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace apts
