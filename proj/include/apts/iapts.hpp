#pragma once

#include <cstddef>
#include <vector>

#include "apts/apts.hpp"
#include "apts/cadam.hpp"
#include "apts/decomposition.hpp"
#include "apts/network.hpp"
#include "apts/trust_region.hpp"

namespace apts {

struct IaptsConfig {
  std::size_t subdomain_count = 2;
  std::size_t local_iters = 5;
  std::size_t global_tr_iters = 1;
  double lr_init = 0.01;  // initial global radius
  double lr_min = 0.001;
  double lr_max = 1.0;
  TrParams tr = default_global_tr();  // delta_min/delta_max are replaced by lr_min/lr_max
  HessianKind global_hessian = HessianKind::identity;
  bool feed_back_global_radius = true;
  bool persist_moments = false;
  bool parallel = true;

  void validate() const;
  /// `tr` with the radius bounds set to [lr_min, lr_max].
  TrParams global_tr() const;
};

/// A contiguous run of layers [first_layer, last_layer] and the matching
/// contiguous parameter range.
struct SubdomainBlock {
  std::size_t id = 0;
  std::size_t first_layer = 0;
  std::size_t last_layer = 0;
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// Balanced layer blocks for `count` subdomains, ordered input to output.
std::vector<SubdomainBlock> make_blocks(const Mlp& net, std::size_t count);
Partition blocks_partition(const Mlp& net, const std::vector<SubdomainBlock>& blocks);

struct GlobalPass {
  double loss = 0.0;
  ParamVector grad;
  LayerCache cache;
};

GlobalPass global_pass_and_cache(const NetworkObjective& obj, const ParamVector& theta, const BatchRef& batch);

/// local_iters CAdam steps per block with per-step radius
/// delta_g / local_iters, all accepted. Gradients are rebuilt from the
/// cache. Returns s_d over each block's parameter range.
std::vector<ParamVector> iapts_local_phase(const Mlp& net, const std::vector<SubdomainBlock>& blocks,
                                          const LayerCache& cache, double delta_g, const IaptsConfig& cfg,
                                          std::vector<CAdamState>* moments = nullptr);

class IaptsOptimizer {
 public:
  IaptsOptimizer(const NetworkObjective& obj, IaptsConfig cfg, ParamVector theta0);

  AptsIterationRecord iterate(const BatchRef& batch);

  const ParamVector& theta() const noexcept { return theta_; }
  double delta() const noexcept { return delta_; }
  const std::vector<SubdomainBlock>& blocks() const noexcept { return blocks_; }
  const IaptsConfig& config() const noexcept { return cfg_; }

 private:
  const NetworkObjective& obj_;
  IaptsConfig cfg_;
  std::vector<SubdomainBlock> blocks_;
  Partition partition_;
  ParamVector theta_;
  double delta_;
  std::size_t k_ = 0;
  HessianProxy global_hessian_;
  std::vector<CAdamState> moments_;
};

AptsResult iapts_run(const NetworkObjective& obj, ParamVector theta0, const IaptsConfig& cfg, std::size_t iterations,
                     const BatchProvider& batch_for = {});

}  // namespace apts
