#pragma once

#include <cstddef>

#include "apts/numeric.hpp"

namespace apts {

/// Adam moments and constants for one subdomain.
struct CAdamState {
  ParamVector m1;
  ParamVector m2;
  std::size_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-3;

  CAdamState() = default;
  CAdamState(std::size_t n, double learning_rate) : m1(n), m2(n), lr(learning_rate) {}

  /// Zeroes the moments and the step counter; keeps constants and lr.
  void reset();
};

struct CAdamStep {
  ParamVector step;  // displacement: theta_next = theta + step
  bool clipped = false;
  double unclipped_norm = 0.0;
};

/// Bias-corrected Adam step, rescaled onto the `norm` ball of radius
/// `delta` when it leaves it. Moments are updated as in plain Adam whether
/// or not the step is clipped. Throws NonFiniteError (state untouched) on a
/// non-finite gradient and DomainError for delta <= 0.
CAdamStep cadam_step(CAdamState& state, const ParamVector& grad, double delta, Norm norm);

}  // namespace apts
