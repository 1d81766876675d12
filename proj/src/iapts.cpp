#include "apts/iapts.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace apts {

void IaptsConfig::validate() const {
  if (subdomain_count == 0) throw ConfigError("subdomain_count must be at least 1");
  if (local_iters == 0) throw ConfigError("local_iters must be at least 1");
  if (!(lr_min > 0.0 && lr_min <= lr_init && lr_init <= lr_max)) {
    throw ConfigError("IAPTS radius bounds must satisfy 0 < lr_min <= lr_init <= lr_max");
  }
  global_tr().validate();
}

TrParams IaptsConfig::global_tr() const {
  TrParams p = tr;
  p.delta_min = lr_min;
  p.delta_max = lr_max;
  return p;
}

std::vector<SubdomainBlock> make_blocks(const Mlp& net, std::size_t count) {
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  make_layer_partition(net.slices(), count, &groups);
  std::vector<SubdomainBlock> blocks;
  blocks.reserve(groups.size());
  for (std::size_t d = 0; d < groups.size(); ++d) {
    const auto [offset, len] = net.block_range(groups[d].first, groups[d].second);
    blocks.push_back({d, groups[d].first, groups[d].second, offset, len});
  }
  return blocks;
}

Partition blocks_partition(const Mlp& net, const std::vector<SubdomainBlock>& blocks) {
  std::vector<std::vector<std::size_t>> subsets;
  for (const auto& b : blocks) {
    std::vector<std::size_t> idx(b.length);
    std::iota(idx.begin(), idx.end(), b.offset);
    subsets.push_back(std::move(idx));
  }
  return Partition(net.parameter_count(), std::move(subsets));
}

GlobalPass global_pass_and_cache(const NetworkObjective& obj, const ParamVector& theta, const BatchRef& batch) {
  GlobalPass out;
  auto eval = obj.evaluate_with_cache(theta, batch, out.cache);
  out.loss = eval.loss;
  out.grad = std::move(eval.grad);
  return out;
}

std::vector<ParamVector> iapts_local_phase(const Mlp& net, const std::vector<SubdomainBlock>& blocks,
                                          const LayerCache& cache, double delta_g, const IaptsConfig& cfg,
                                          std::vector<CAdamState>* moments) {
  if (!(delta_g > 0.0)) throw DomainError("iapts_local_phase: global radius must be positive");
  if (!cache.has_backward()) throw StateError("iapts_local_phase needs a populated cache");
  const double step_radius = delta_g / static_cast<double>(cfg.local_iters);
  std::vector<ParamVector> steps(blocks.size());

  for_each_subdomain(blocks.size(), cfg.parallel, [&](std::size_t d) {
    const SubdomainBlock& b = blocks[d];
    const auto begin = cache.theta.values().begin() + static_cast<std::ptrdiff_t>(b.offset);
    const ParamVector x0(std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(b.length)));

    CAdamState fresh(b.length, step_radius);
    CAdamState& state = moments ? (*moments)[d] : fresh;
    state.lr = step_radius;
    ParamVector x = x0;
    ParamVector s(b.length);
    for (std::size_t t = 0; t < cfg.local_iters; ++t) {
      const ParamVector g = net.local_grad_from_cache(x.span(), cache, b.first_layer, b.last_layer);
      if (!g.all_finite()) throw NonFiniteError("non-finite reconstructed gradient");
      const ParamVector step = cadam_step(state, g, step_radius, cfg.tr.norm).step;
      x += step;
      s += step;
    }
    steps[d] = std::move(s);
  });
  return steps;
}

IaptsOptimizer::IaptsOptimizer(const NetworkObjective& obj, IaptsConfig cfg, ParamVector theta0)
    : obj_(obj),
      cfg_(std::move(cfg)),
      blocks_((cfg_.validate(), make_blocks(obj.model(), cfg_.subdomain_count))),
      partition_(blocks_partition(obj.model(), blocks_)),
      theta_(std::move(theta0)),
      delta_(cfg_.lr_init),
      global_hessian_(cfg_.global_hessian == HessianKind::lbfgs ? HessianProxy::lbfgs() : HessianProxy::identity()) {
  require_same_size(theta_.size(), obj_.dim(), "IaptsOptimizer initial iterate");
  require_finite(theta_, "IaptsOptimizer initial iterate");
  if (cfg_.persist_moments) {
    for (const auto& b : blocks_) moments_.emplace_back(b.length, delta_);
  }
}

AptsIterationRecord IaptsOptimizer::iterate(const BatchRef& batch) {
  const auto t0 = std::chrono::steady_clock::now();
  const TrParams tr = cfg_.global_tr();
  AptsIterationRecord rec;
  rec.k = k_++;
  rec.delta_before = delta_;

  GlobalPass pass = global_pass_and_cache(obj_, theta_, batch);
  if (!std::isfinite(pass.loss) || !pass.grad.all_finite()) {
    throw NonFiniteError("IAPTS global pass produced a non-finite loss or gradient");
  }
  rec.f_before = pass.loss;

  const auto local = iapts_local_phase(obj_.model(), blocks_, pass.cache, delta_, cfg_,
                                       cfg_.persist_moments ? &moments_ : nullptr);
  const ParamVector step = assemble_step(partition_, local);
  const double predicted = -dot(pass.grad, step);
  rec.local_decreases.assign(1, predicted);

  TrState current{theta_, delta_, pass.loss, std::move(pass.grad), std::move(global_hessian_), {}};
  auto acc = global_acceptance(obj_, current, step, rec.local_decreases, tr, batch);
  rec.rho_global = acc.rho;
  rec.accepted = acc.accepted;
  rec.delta_half = acc.state.delta;
  rec.f_half = acc.state.f_value;
  rec.step_norm = norm(acc.state.theta - theta_, tr.norm);
  if (!acc.accepted) {
    for (auto& m : moments_) m.reset();
  }

  TrState final_state = tr_run(obj_, std::move(acc.state), tr, cfg_.global_tr_iters, batch);
  theta_ = std::move(final_state.theta);
  delta_ = std::clamp(cfg_.feed_back_global_radius ? final_state.delta : rec.delta_half, cfg_.lr_min, cfg_.lr_max);
  global_hessian_ = std::move(final_state.hessian);

  rec.f_after = final_state.f_value;
  rec.delta_after = delta_;
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

AptsResult iapts_run(const NetworkObjective& obj, ParamVector theta0, const IaptsConfig& cfg, std::size_t iterations,
                     const BatchProvider& batch_for) {
  IaptsOptimizer opt(obj, cfg, std::move(theta0));
  AptsResult out;
  for (std::size_t k = 0; k < iterations; ++k) {
    out.records.push_back(opt.iterate(batch_for ? batch_for(k) : BatchRef::full()));
  }
  out.theta = opt.theta();
  out.delta = opt.delta();
  return out;
}

}  // namespace apts
