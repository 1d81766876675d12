#include "apts/cadam.hpp"

#include <cmath>

namespace apts {

void CAdamState::reset() {
  m1 = ParamVector(m1.size());
  m2 = ParamVector(m2.size());
  t = 0;
}

CAdamStep cadam_step(CAdamState& state, const ParamVector& grad, double delta, Norm norm_kind) {
  if (!(delta > 0.0)) throw DomainError("cadam_step: radius must be positive");
  require_same_size(grad.size(), state.m1.size(), "cadam_step");
  require_finite(grad, "cadam_step gradient");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  CAdamStep out{ParamVector(grad.size()), false, 0.0};
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.m1[i] = state.beta1 * state.m1[i] + (1.0 - state.beta1) * grad[i];
    state.m2[i] = state.beta2 * state.m2[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double m_hat = state.m1[i] / bc1;
    const double v_hat = state.m2[i] / bc2;
    out.step[i] = -state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }

  out.unclipped_norm = norm(out.step, norm_kind);
  if (out.unclipped_norm > delta) {
    out.step *= delta / out.unclipped_norm;
    out.clipped = true;
  }
  return out;
}

}  // namespace apts
