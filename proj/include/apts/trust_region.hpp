#pragma once

#include <cstddef>
#include <deque>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "apts/numeric.hpp"
#include "apts/objective.hpp"

namespace apts {

struct TrParams {
  double eta1 = 0.1;
  double eta2 = 0.75;
  double gamma_dec = 0.5;
  double gamma_inc = 2.0;
  Norm norm = Norm::L2;
  double delta_min = 1e-12;
  double delta_max = 1e6;

  /// Throws DomainError unless 0 < eta1 < eta2 < 1, 0 < gamma_dec < 1 <=
  /// gamma_inc and 0 < delta_min <= delta_max.
  void validate() const;
};

enum class HessianKind { identity, lbfgs };

/// Symmetric curvature model: the identity or a limited-memory BFGS
/// approximation in compact form, B = sigma I - W M^{-1} W^T.
class HessianProxy {
 public:
  static HessianProxy identity() { return HessianProxy(HessianKind::identity, 0); }
  static HessianProxy lbfgs(std::size_t memory = 10) { return HessianProxy(HessianKind::lbfgs, memory); }

  HessianKind kind() const noexcept { return kind_; }
  std::size_t pairs() const noexcept { return s_.size(); }

  ParamVector apply(const ParamVector& v) const;

  /// Adds the pair (s, y). Pairs with <s, y> <= 1e-10 |s| |y| are skipped;
  /// returns whether the pair was stored. No-op for the identity.
  bool update(const ParamVector& s, const ParamVector& y);
  void reset();

 private:
  HessianProxy(HessianKind kind, std::size_t memory) : kind_(kind), memory_(memory) {}
  void rebuild();

  HessianKind kind_;
  std::size_t memory_;
  std::deque<ParamVector> s_;
  std::deque<ParamVector> y_;
  double sigma_ = 1.0;
  Eigen::MatrixXd middle_inverse_;
};

/// m(s) = <g, s> + 1/2 <s, H s>
struct TrModel {
  const ParamVector& grad;
  const HessianProxy& hessian;

  double value(const ParamVector& s) const;
};

/// Approximate minimizer of the model over |s|_norm <= delta with at least
/// Cauchy decrease. Exact for the identity proxy; truncated CG with
/// boundary exit for L-BFGS. A zero gradient yields the zero step.
ParamVector solve_subproblem(const TrModel& model, double delta, Norm norm);

/// Minimizer of the model along -g inside the norm ball.
ParamVector cauchy_point(const TrModel& model, double delta, Norm norm);

/// Sentinel returned by rho() for a non-positive predicted decrease.
inline constexpr double kRejectRho = -std::numeric_limits<double>::infinity();

/// (f_old - f_new) / max(model_decrease, 1e-16); kRejectRho when
/// model_decrease <= 0.
double rho(double f_old, double f_new, double model_decrease);

enum class TrOutcome { accept_grow, accept_hold, reject_shrink };

/// Radius/acceptance rule: grow when rho >= eta2, hold when eta1 < rho <
/// eta2, shrink otherwise. The returned radius is clamped to
/// [delta_min, delta_max].
TrOutcome tr_decide(double rho_value, double delta, const TrParams& params, double& next_delta);

struct TrRecord {
  double rho = 0.0;
  bool accepted = false;
  double step_norm = 0.0;
  double radius = 0.0;   // radius the step was computed with
  double delta = 0.0;    // radius after the update
  double f_value = 0.0;  // objective after the update
};

struct TrState {
  ParamVector theta;
  double delta = 1.0;
  double f_value = 0.0;
  ParamVector grad;
  HessianProxy hessian = HessianProxy::identity();
  std::vector<TrRecord> history;
};

/// Evaluates the objective at theta0. Throws NonFiniteError if the value or
/// gradient is not finite.
TrState make_tr_state(const Objective& obj, ParamVector theta0, double delta0, const BatchRef& batch,
                      HessianProxy hessian = HessianProxy::identity());

/// One trust-region iteration. A trial value of +inf (or a non-finite
/// trial gradient) counts as a rejection; a NaN trial value throws
/// NonFiniteError and leaves `state` untouched.
TrState tr_step(const Objective& obj, const TrState& state, const TrParams& params, const BatchRef& batch);

/// `iterations` calls of tr_step.
TrState tr_run(const Objective& obj, TrState state, const TrParams& params, std::size_t iterations,
               const BatchRef& batch);
TrState tr_run(const Objective& obj, ParamVector theta0, double delta0, const TrParams& params, std::size_t iterations,
               const BatchRef& batch = BatchRef::full(), HessianProxy hessian = HessianProxy::identity());

}  // namespace apts
