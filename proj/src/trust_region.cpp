#include "apts/trust_region.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

namespace apts {

namespace {

// Largest tau >= 0 with |z + tau d|_2 = delta, assuming |z|_2 <= delta.
double boundary_tau(const ParamVector& z, const ParamVector& d, double delta) {
  const double a = dot(d, d);
  const double b = 2.0 * dot(z, d);
  const double c = dot(z, z) - delta * delta;
  const double disc = std::sqrt(std::max(0.0, b * b - 4.0 * a * c));
  // numerically stable root selection
  return b >= 0.0 ? (-2.0 * c) / (b + disc) : (-b + disc) / (2.0 * a);
}

// Steihaug-Toint truncated CG on the 2-norm ball.
ParamVector steihaug_cg(const TrModel& model, double delta) {
  const ParamVector& g = model.grad;
  const double gnorm = norm(g, Norm::L2);
  const double tol = std::min(0.1, std::sqrt(gnorm)) * gnorm;

  ParamVector z(g.size());
  ParamVector r = g;
  ParamVector d = -1.0 * g;
  double rr = dot(r, r);
  const std::size_t max_iter = std::max<std::size_t>(g.size(), 1);

  for (std::size_t j = 0; j < max_iter; ++j) {
    const ParamVector bd = model.hessian.apply(d);
    const double dbd = dot(d, bd);
    if (dbd <= 0.0) return axpy(boundary_tau(z, d, delta), d, z);
    const double alpha = rr / dbd;
    ParamVector z_next = axpy(alpha, d, z);
    if (norm(z_next, Norm::L2) >= delta) return axpy(boundary_tau(z, d, delta), d, z);
    r = axpy(alpha, bd, r);
    const double rr_next = dot(r, r);
    z = std::move(z_next);
    if (std::sqrt(rr_next) < tol) break;
    d = axpy(rr_next / rr, d, -1.0 * r);
    rr = rr_next;
  }
  return z;
}

}  // namespace

void TrParams::validate() const {
  if (!(0.0 < eta1 && eta1 < eta2 && eta2 < 1.0)) throw DomainError("TrParams: need 0 < eta1 < eta2 < 1");
  if (!(0.0 < gamma_dec && gamma_dec < 1.0 && gamma_inc >= 1.0)) {
    throw DomainError("TrParams: need 0 < gamma_dec < 1 <= gamma_inc");
  }
  if (!(0.0 < delta_min && delta_min <= delta_max)) throw DomainError("TrParams: need 0 < delta_min <= delta_max");
}

ParamVector HessianProxy::apply(const ParamVector& v) const {
  if (kind_ == HessianKind::identity || s_.empty()) return v;
  const std::size_t k = s_.size();
  Eigen::VectorXd wv(2 * k);
  for (std::size_t i = 0; i < k; ++i) {
    wv(static_cast<Eigen::Index>(i)) = sigma_ * dot(s_[i], v);
    wv(static_cast<Eigen::Index>(k + i)) = dot(y_[i], v);
  }
  const Eigen::VectorXd coeff = middle_inverse_ * wv;
  ParamVector out = sigma_ * v;
  for (std::size_t i = 0; i < k; ++i) {
    out = axpy(-sigma_ * coeff(static_cast<Eigen::Index>(i)), s_[i], out);
    out = axpy(-coeff(static_cast<Eigen::Index>(k + i)), y_[i], out);
  }
  return out;
}

bool HessianProxy::update(const ParamVector& s, const ParamVector& y) {
  if (kind_ == HessianKind::identity) return false;
  require_same_size(s.size(), y.size(), "HessianProxy::update");
  const double sy = dot(s, y);
  if (!(sy > 1e-10 * norm(s, Norm::L2) * norm(y, Norm::L2))) return false;
  if (s_.size() == memory_) {
    s_.pop_front();
    y_.pop_front();
  }
  s_.push_back(s);
  y_.push_back(y);
  sigma_ = dot(y, y) / sy;
  rebuild();
  return true;
}

void HessianProxy::reset() {
  s_.clear();
  y_.clear();
  sigma_ = 1.0;
  middle_inverse_.resize(0, 0);
}

// M = [[sigma S^T S, L], [L^T, -D]] with L the strictly lower part of S^T Y
// and D its diagonal.
void HessianProxy::rebuild() {
  const auto k = static_cast<Eigen::Index>(s_.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      m(i, j) = sigma_ * dot(s_[static_cast<std::size_t>(i)], s_[static_cast<std::size_t>(j)]);
      if (i > j) {
        const double l = dot(s_[static_cast<std::size_t>(i)], y_[static_cast<std::size_t>(j)]);
        m(i, k + j) = l;
        m(k + j, i) = l;
      }
    }
    m(k + i, k + i) = -dot(s_[static_cast<std::size_t>(i)], y_[static_cast<std::size_t>(i)]);
  }
  middle_inverse_ = m.fullPivLu().inverse();
  // symmetrize against round-off so that apply() stays self-adjoint
  middle_inverse_ = 0.5 * (middle_inverse_ + middle_inverse_.transpose()).eval();
}

double TrModel::value(const ParamVector& s) const { return dot(grad, s) + 0.5 * dot(s, hessian.apply(s)); }

ParamVector cauchy_point(const TrModel& model, double delta, Norm norm_kind) {
  const ParamVector& g = model.grad;
  const double gn = norm(g, norm_kind);
  if (gn == 0.0) return ParamVector(g.size());
  const double t_max = delta / gn;
  const double gg = dot(g, g);
  const double gbg = dot(g, model.hessian.apply(g));
  const double t = gbg > 0.0 ? std::min(gg / gbg, t_max) : t_max;
  return -t * g;
}

ParamVector solve_subproblem(const TrModel& model, double delta, Norm norm_kind) {
  if (!(delta > 0.0)) throw DomainError("solve_subproblem: radius must be positive");
  const ParamVector& g = model.grad;
  if (norm(g, Norm::Linf) == 0.0) return ParamVector(g.size());

  if (model.hessian.kind() == HessianKind::identity || model.hessian.pairs() == 0) {
    if (norm_kind == Norm::L2) return -std::min(delta / norm(g, Norm::L2), 1.0) * g;
    // separable: minimize g_i s_i + s_i^2 / 2 over |s_i| <= delta
    ParamVector s(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) s[i] = -std::clamp(g[i], -delta, delta);
    return s;
  }

  // The 2-ball of radius delta lies inside the inf-ball of the same radius.
  ParamVector s = steihaug_cg(model, delta);
  if (norm_kind == Norm::Linf) {
    ParamVector c = cauchy_point(model, delta, Norm::Linf);
    if (model.value(c) < model.value(s)) s = std::move(c);
  }
  return s;
}

double rho(double f_old, double f_new, double model_decrease) {
  if (!(model_decrease > 0.0)) return kRejectRho;
  return (f_old - f_new) / std::max(model_decrease, 1e-16);
}

TrOutcome tr_decide(double rho_value, double delta, const TrParams& params, double& next_delta) {
  TrOutcome outcome;
  if (rho_value >= params.eta2) {
    outcome = TrOutcome::accept_grow;
    next_delta = params.gamma_inc * delta;
  } else if (params.eta1 < rho_value) {
    outcome = TrOutcome::accept_hold;
    next_delta = delta;
  } else {
    outcome = TrOutcome::reject_shrink;
    next_delta = params.gamma_dec * delta;
  }
  next_delta = std::clamp(next_delta, params.delta_min, params.delta_max);
  return outcome;
}

TrState make_tr_state(const Objective& obj, ParamVector theta0, double delta0, const BatchRef& batch,
                      HessianProxy hessian) {
  if (!(delta0 > 0.0)) throw DomainError("trust region radius must be positive");
  require_same_size(theta0.size(), obj.dim(), "make_tr_state");
  auto eval = obj.evaluate(theta0, batch);
  if (!std::isfinite(eval.loss)) throw NonFiniteError("objective is not finite at the initial iterate");
  require_finite(eval.grad, "initial gradient");
  return TrState{std::move(theta0), delta0, eval.loss, std::move(eval.grad), std::move(hessian), {}};
}

namespace {

// Advances `state` by one iteration. Everything that can throw happens
// before the first write, so a NaN trial leaves `state` untouched.
void step_in_place(const Objective& obj, TrState& state, const TrParams& params, const BatchRef& batch) {
  const TrModel model{state.grad, state.hessian};
  const ParamVector s = solve_subproblem(model, state.delta, params.norm);
  const double predicted = -model.value(s);
  const double step_norm = norm(s, params.norm);

  double rho_value = kRejectRho;
  Evaluation trial;
  bool trial_usable = false;
  if (step_norm > 0.0) {
    trial = obj.evaluate(state.theta + s, batch);
    if (std::isnan(trial.loss)) throw NonFiniteError("objective returned NaN at the trial point");
    trial_usable = std::isfinite(trial.loss) && trial.grad.all_finite();
    if (trial_usable) rho_value = rho(state.f_value, trial.loss, predicted);
  }

  double next_delta = state.delta;
  const TrOutcome outcome = tr_decide(rho_value, state.delta, params, next_delta);
  const bool accepted = outcome != TrOutcome::reject_shrink && trial_usable;
  if (trial_usable) state.hessian.update(s, trial.grad - state.grad);
  if (accepted) {
    state.theta += s;
    state.f_value = trial.loss;
    state.grad = std::move(trial.grad);
  }
  state.history.push_back({rho_value, accepted, step_norm, state.delta, next_delta, state.f_value});
  state.delta = next_delta;
}

}  // namespace

TrState tr_step(const Objective& obj, const TrState& state, const TrParams& params, const BatchRef& batch) {
  TrState next = state;
  step_in_place(obj, next, params, batch);
  return next;
}

TrState tr_run(const Objective& obj, TrState state, const TrParams& params, std::size_t iterations,
               const BatchRef& batch) {
  params.validate();
  for (std::size_t k = 0; k < iterations; ++k) step_in_place(obj, state, params, batch);
  return state;
}

TrState tr_run(const Objective& obj, ParamVector theta0, double delta0, const TrParams& params, std::size_t iterations,
               const BatchRef& batch, HessianProxy hessian) {
  return tr_run(obj, make_tr_state(obj, std::move(theta0), delta0, batch, std::move(hessian)), params, iterations,
                batch);
}

}  // namespace apts
