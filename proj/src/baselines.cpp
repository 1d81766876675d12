#include "apts/baselines.hpp"

#include <cmath>

namespace apts {

AdamOptimizer::AdamOptimizer(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n), v_(n) {
  if (!(lr > 0.0)) throw DomainError("Adam: learning rate must be positive");
}

ParamVector AdamOptimizer::step(const ParamVector& grad) {
  require_same_size(grad.size(), m_.size(), "AdamOptimizer::step");
  require_finite(grad, "Adam gradient");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  ParamVector out(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    out[i] = -lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
  }
  return out;
}

SgdMomentum::SgdMomentum(std::size_t n, double lr, double momentum)
    : lr_(lr), momentum_(momentum), velocity_(n) {
  if (!(lr > 0.0)) throw DomainError("SGD: learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("SGD: momentum must be in [0, 1)");
}

ParamVector SgdMomentum::step(const ParamVector& grad) {
  require_same_size(grad.size(), velocity_.size(), "SgdMomentum::step");
  require_finite(grad, "SGD gradient");
  for (std::size_t i = 0; i < grad.size(); ++i) velocity_[i] = momentum_ * velocity_[i] + grad[i];
  return -lr_ * velocity_;
}

}  // namespace apts
