#include "apts/local_problem.hpp"

namespace apts {

LocalObjective::LocalObjective(const Objective& base, const Partition& partition, std::size_t subdomain,
                               ParamVector anchor, const ParamVector& anchor_grad, const BatchRef& correction_batch)
    : base_(base), partition_(partition), subdomain_(subdomain), anchor_(std::move(anchor)) {
  require_same_size(anchor_.size(), base_.dim(), "LocalObjective anchor");
  require_same_size(partition_.dim(), base_.dim(), "LocalObjective partition");
  require_same_size(anchor_grad.size(), base_.dim(), "LocalObjective anchor gradient");
  anchor_restricted_ = restrict_to(partition_, subdomain_, anchor_);
  correction_ = restrict_to(partition_, subdomain_, anchor_grad);
  correction_ -= restricted_eval(anchor_restricted_, correction_batch).grad;
}

Evaluation LocalObjective::restricted_eval(const ParamVector& theta_d, const BatchRef& batch) const {
  require_same_size(theta_d.size(), anchor_restricted_.size(), "restricted_eval");
  ParamVector full = anchor_;
  const auto& idx = partition_.indices(subdomain_);
  for (std::size_t k = 0; k < idx.size(); ++k) full[idx[k]] = theta_d[k];
  auto eval = base_.evaluate(full, batch);
  return {eval.loss, restrict_to(partition_, subdomain_, eval.grad)};
}

Evaluation LocalObjective::consistent_eval(const ParamVector& theta_d, const BatchRef& batch) const {
  auto eval = restricted_eval(theta_d, batch);
  eval.loss += dot(correction_, theta_d - anchor_restricted_);
  eval.grad += correction_;
  return eval;
}

}  // namespace apts
