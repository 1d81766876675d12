#pragma once

#include <cstddef>

#include "apts/decomposition.hpp"
#include "apts/objective.hpp"

namespace apts {

/// First-order consistent subdomain objective
///
///   f~_d(x) = f_d(x) + <R_d g_anchor - grad f_d(R_d theta_k), x - R_d theta_k>
///
/// where f_d(x) = f(R_d^T x + (I - R_d^T R_d) theta_k) holds every
/// coordinate outside the subdomain frozen at the anchor. `anchor_grad` is
/// the global gradient at the anchor; the correction is computed once, at
/// construction, on `correction_batch`.
class LocalObjective final : public Objective {
 public:
  LocalObjective(const Objective& base, const Partition& partition, std::size_t subdomain, ParamVector anchor,
                 const ParamVector& anchor_grad, const BatchRef& correction_batch);

  std::size_t dim() const override { return anchor_restricted_.size(); }

  /// Same as consistent_eval.
  Evaluation evaluate(const ParamVector& theta_d, const BatchRef& batch) const override {
    return consistent_eval(theta_d, batch);
  }

  /// f_d and its gradient restricted to the subdomain.
  Evaluation restricted_eval(const ParamVector& theta_d, const BatchRef& batch) const;
  /// f~_d and its gradient.
  Evaluation consistent_eval(const ParamVector& theta_d, const BatchRef& batch) const;

  std::size_t subdomain() const noexcept { return subdomain_; }
  const ParamVector& correction() const noexcept { return correction_; }
  const ParamVector& anchor() const noexcept { return anchor_; }
  const ParamVector& anchor_restricted() const noexcept { return anchor_restricted_; }

 private:
  const Objective& base_;
  const Partition& partition_;
  std::size_t subdomain_;
  ParamVector anchor_;
  ParamVector anchor_restricted_;
  ParamVector correction_;
};

}  // namespace apts
