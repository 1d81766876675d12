#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "apts/cadam.hpp"
#include "apts/decomposition.hpp"
#include "apts/objective.hpp"
#include "apts/trust_region.hpp"

namespace apts {

enum class LocalSolver { tr, cadam };
enum class PartitionStrategy { even_blocks, layer_blocks };

/// Trust-region parameters for the global ball. The inf-norm is the
/// default: with disjoint subdomains the assembled step then satisfies
/// |s|_inf = max_d |s_d|_inf <= Delta_G.
inline TrParams default_global_tr() {
  TrParams p;
  p.norm = Norm::Linf;
  return p;
}

struct AptsConfig {
  std::size_t subdomain_count = 2;
  std::size_t inner_iters = 5;      // local iterations m
  std::size_t global_tr_iters = 1;  // global sweep m_G
  TrParams tr = default_global_tr();
  LocalSolver local_solver = LocalSolver::tr;
  PartitionStrategy partition_strategy = PartitionStrategy::even_blocks;
  HessianKind local_hessian = HessianKind::identity;
  HessianKind global_hessian = HessianKind::identity;
  /// Carry the radius left by the global sweep into the next outer
  /// iteration; otherwise restart from the post-acceptance radius.
  bool feed_back_global_radius = true;
  /// Keep CAdam moments between outer iterations (cadam local solver).
  bool persist_moments = false;
  bool parallel = true;

  void validate() const;
};

struct AptsIterationRecord {
  std::size_t k = 0;
  double rho_global = 0.0;
  bool accepted = false;
  double delta_before = 0.0;
  double delta_half = 0.0;
  double delta_after = 0.0;
  std::vector<double> local_decreases;
  double f_before = 0.0;
  double f_half = 0.0;
  double f_after = 0.0;
  double step_norm = 0.0;  // |theta_half - theta_k| in the global norm
  double wall_time = 0.0;  // seconds
};

struct LocalPhaseResult {
  std::vector<ParamVector> steps;       // s_d, one per subdomain
  std::vector<double> local_decreases;  // f~_d(R_d theta_k) - f~_d(theta_d^{k,m})
};

/// Runs `cfg.inner_iters` local iterations on every subdomain, in parallel
/// when enabled, starting from radius delta_g / m with no radius growth.
/// `grad_k` is the global gradient at theta_k on `batch`. A failing worker
/// aborts the phase with a SubdomainError naming the lowest failing index.
/// `moments` (one per subdomain) is used by the cadam solver when non-null.
LocalPhaseResult local_phase(const Objective& obj, const Partition& partition, const ParamVector& theta_k,
                             const ParamVector& grad_k, double delta_g, const AptsConfig& cfg, const BatchRef& batch,
                             std::vector<CAdamState>* moments = nullptr);

/// sum_d R_d^T s_d, accumulated in ascending subdomain order.
ParamVector assemble_step(const Partition& partition, std::span<const ParamVector> steps);

struct AcceptanceResult {
  TrState state;  // theta / radius after the acceptance test
  double rho = 0.0;
  bool accepted = false;
};

/// Accept-or-reject test for an assembled step, using the sum of
/// `predicted_decreases` (summed in order) as the model decrease. The
/// radius is updated by the trust-region rule and clamped to the bounds in
/// `tr`. `current` carries theta_k, f(theta_k), its gradient and radius.
AcceptanceResult global_acceptance(const Objective& obj, const TrState& current, const ParamVector& step,
                                   std::span<const double> predicted_decreases, const TrParams& tr,
                                   const BatchRef& batch);

/// Additively preconditioned trust-region optimizer over a fixed partition.
class AptsOptimizer {
 public:
  AptsOptimizer(const Objective& obj, Partition partition, AptsConfig cfg, ParamVector theta0, double delta0);

  /// One outer iteration on `batch`: local phase, assembly, global
  /// acceptance and the global trust-region sweep.
  AptsIterationRecord iterate(const BatchRef& batch);

  const ParamVector& theta() const noexcept { return theta_; }
  double delta() const noexcept { return delta_; }
  const Partition& partition() const noexcept { return partition_; }
  const AptsConfig& config() const noexcept { return cfg_; }

 private:
  const Objective& obj_;
  Partition partition_;
  AptsConfig cfg_;
  ParamVector theta_;
  double delta_;
  std::size_t k_ = 0;
  HessianProxy global_hessian_;
  std::vector<CAdamState> moments_;
};

struct AptsResult {
  ParamVector theta;
  double delta = 0.0;
  std::vector<AptsIterationRecord> records;
};

using BatchProvider = std::function<BatchRef(std::size_t iteration)>;

AptsResult apts_run(const Objective& obj, const Partition& partition, ParamVector theta0, double delta0,
                    const AptsConfig& cfg, std::size_t iterations, const BatchProvider& batch_for = {});

/// Runs fn(d) for d in [0, count), on separate threads when `parallel`.
/// Exceptions are collected and rethrown as SubdomainError for the lowest
/// failing d after all workers joined.
void for_each_subdomain(std::size_t count, bool parallel, const std::function<void(std::size_t)>& fn);

}  // namespace apts
