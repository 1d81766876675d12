#include "apts/apts.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <thread>

#include "apts/local_problem.hpp"

namespace apts {

namespace {

HessianProxy make_hessian(HessianKind kind) {
  return kind == HessianKind::lbfgs ? HessianProxy::lbfgs() : HessianProxy::identity();
}

}  // namespace

void AptsConfig::validate() const {
  if (subdomain_count == 0) throw ConfigError("subdomain_count must be at least 1");
  if (inner_iters == 0) throw ConfigError("inner_iters must be at least 1");
  tr.validate();
}

void for_each_subdomain(std::size_t count, bool parallel, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  auto guarded = [&](std::size_t d) {
    try {
      fn(d);
    } catch (...) {
      errors[d] = std::current_exception();
    }
  };
  if (parallel && count > 1) {
    std::vector<std::jthread> workers;
    workers.reserve(count);
    for (std::size_t d = 0; d < count; ++d) workers.emplace_back(guarded, d);
  } else {
    for (std::size_t d = 0; d < count; ++d) guarded(d);
  }
  for (std::size_t d = 0; d < count; ++d) {
    if (!errors[d]) continue;
    try {
      std::rethrow_exception(errors[d]);
    } catch (const std::exception& e) {
      throw SubdomainError(d, e.what());
    } catch (...) {
      throw SubdomainError(d, "unknown failure");
    }
  }
}

LocalPhaseResult local_phase(const Objective& obj, const Partition& partition, const ParamVector& theta_k,
                             const ParamVector& grad_k, double delta_g, const AptsConfig& cfg, const BatchRef& batch,
                             std::vector<CAdamState>* moments) {
  if (!(delta_g > 0.0)) throw DomainError("local_phase: global radius must be positive");
  const std::size_t count = partition.subdomain_count();
  const double local_radius = delta_g / static_cast<double>(cfg.inner_iters);

  TrParams local = cfg.tr;
  local.gamma_inc = 1.0;
  local.delta_max = local_radius;
  local.delta_min = std::min(cfg.tr.delta_min, local_radius);

  LocalPhaseResult out;
  out.steps.resize(count);
  out.local_decreases.resize(count);

  for_each_subdomain(count, cfg.parallel, [&](std::size_t d) {
    const LocalObjective lo(obj, partition, d, theta_k, grad_k, batch);
    const ParamVector& x0 = lo.anchor_restricted();

    if (cfg.local_solver == LocalSolver::tr) {
      TrState st = make_tr_state(lo, x0, local_radius, batch, make_hessian(cfg.local_hessian));
      const double f0 = st.f_value;
      st = tr_run(lo, std::move(st), local, cfg.inner_iters, batch);
      out.steps[d] = st.theta - x0;
      out.local_decreases[d] = f0 - st.f_value;
      return;
    }

    CAdamState fresh(x0.size(), local_radius);
    CAdamState& state = moments ? (*moments)[d] : fresh;
    state.lr = local_radius;
    ParamVector x = x0;
    ParamVector s(x0.size());
    double f0 = 0.0;
    for (std::size_t t = 0; t < cfg.inner_iters; ++t) {
      const auto eval = lo.evaluate(x, batch);
      if (t == 0) f0 = eval.loss;
      const ParamVector step = cadam_step(state, eval.grad, local_radius, cfg.tr.norm).step;
      x += step;
      s += step;
    }
    out.steps[d] = std::move(s);
    out.local_decreases[d] = f0 - lo.evaluate(x, batch).loss;
  });
  return out;
}

ParamVector assemble_step(const Partition& partition, std::span<const ParamVector> steps) {
  require_same_size(steps.size(), partition.subdomain_count(), "assemble_step subdomain count");
  ParamVector s(partition.dim());
  for (std::size_t d = 0; d < steps.size(); ++d) {
    const auto& idx = partition.indices(d);
    require_same_size(steps[d].size(), idx.size(), "assemble_step");
    for (std::size_t k = 0; k < idx.size(); ++k) s[idx[k]] += steps[d][k];
  }
  return s;
}

AcceptanceResult global_acceptance(const Objective& obj, const TrState& current, const ParamVector& step,
                                   std::span<const double> predicted_decreases, const TrParams& tr,
                                   const BatchRef& batch) {
  require_same_size(step.size(), current.theta.size(), "global_acceptance");
  double predicted = 0.0;
  for (double v : predicted_decreases) predicted += v;

  AcceptanceResult out{current, kRejectRho, false};
  Evaluation trial;
  bool usable = false;
  if (norm(step, Norm::Linf) > 0.0) {
    trial = obj.evaluate(current.theta + step, batch);
    if (std::isnan(trial.loss)) throw NonFiniteError("objective returned NaN at the assembled step");
    usable = std::isfinite(trial.loss) && trial.grad.all_finite();
    if (usable) {
      out.rho = rho(current.f_value, trial.loss, predicted);
      out.state.hessian.update(step, trial.grad - current.grad);
    }
  }

  const TrOutcome outcome = tr_decide(out.rho, current.delta, tr, out.state.delta);
  out.accepted = usable && outcome != TrOutcome::reject_shrink;
  if (out.accepted) {
    out.state.theta += step;
    out.state.f_value = trial.loss;
    out.state.grad = std::move(trial.grad);
  }
  out.state.history.push_back({out.rho, out.accepted, norm(step, tr.norm), current.delta, out.state.delta,
                               out.state.f_value});
  return out;
}

AptsOptimizer::AptsOptimizer(const Objective& obj, Partition partition, AptsConfig cfg, ParamVector theta0,
                             double delta0)
    : obj_(obj),
      partition_(std::move(partition)),
      cfg_(std::move(cfg)),
      theta_(std::move(theta0)),
      delta_(delta0),
      global_hessian_(make_hessian(cfg_.global_hessian)) {
  cfg_.validate();
  require_same_size(theta_.size(), obj_.dim(), "AptsOptimizer initial iterate");
  require_same_size(partition_.dim(), obj_.dim(), "AptsOptimizer partition");
  if (!(delta0 > 0.0)) throw DomainError("AptsOptimizer: initial radius must be positive");
  delta_ = std::clamp(delta_, cfg_.tr.delta_min, cfg_.tr.delta_max);
  if (cfg_.persist_moments) {
    for (std::size_t d = 0; d < partition_.subdomain_count(); ++d) {
      moments_.emplace_back(partition_.subdomain_dim(d), delta_);
    }
  }
}

AptsIterationRecord AptsOptimizer::iterate(const BatchRef& batch) {
  const auto t0 = std::chrono::steady_clock::now();
  AptsIterationRecord rec;
  rec.k = k_++;
  rec.delta_before = delta_;

  TrState current = make_tr_state(obj_, theta_, delta_, batch, std::move(global_hessian_));
  rec.f_before = current.f_value;

  auto local = local_phase(obj_, partition_, theta_, current.grad, delta_, cfg_, batch,
                           cfg_.persist_moments ? &moments_ : nullptr);
  const ParamVector step = assemble_step(partition_, local.steps);
  rec.local_decreases = std::move(local.local_decreases);

  auto acc = global_acceptance(obj_, current, step, rec.local_decreases, cfg_.tr, batch);
  rec.rho_global = acc.rho;
  rec.accepted = acc.accepted;
  rec.delta_half = acc.state.delta;
  rec.f_half = acc.state.f_value;
  rec.step_norm = norm(acc.state.theta - theta_, cfg_.tr.norm);
  if (!acc.accepted) {
    for (auto& m : moments_) m.reset();
  }

  TrState final_state = tr_run(obj_, std::move(acc.state), cfg_.tr, cfg_.global_tr_iters, batch);
  theta_ = std::move(final_state.theta);
  delta_ = cfg_.feed_back_global_radius ? final_state.delta : rec.delta_half;
  global_hessian_ = std::move(final_state.hessian);

  rec.f_after = final_state.f_value;
  rec.delta_after = delta_;
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

AptsResult apts_run(const Objective& obj, const Partition& partition, ParamVector theta0, double delta0,
                    const AptsConfig& cfg, std::size_t iterations, const BatchProvider& batch_for) {
  AptsOptimizer opt(obj, partition, cfg, std::move(theta0), delta0);
  AptsResult out;
  for (std::size_t k = 0; k < iterations; ++k) {
    out.records.push_back(opt.iterate(batch_for ? batch_for(k) : BatchRef::full()));
  }
  out.theta = opt.theta();
  out.delta = opt.delta();
  return out;
}

}  // namespace apts
