#pragma once

#include "apts/numeric.hpp"

namespace apts {

/// Plain Adam; step() returns the displacement to add to the parameters.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  ParamVector step(const ParamVector& grad);
  double lr() const noexcept { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  ParamVector m_, v_;
};

/// Heavy-ball SGD: v <- mu v + g, theta <- theta - lr v.
class SgdMomentum {
 public:
  SgdMomentum(std::size_t n, double lr, double momentum);

  ParamVector step(const ParamVector& grad);
  double lr() const noexcept { return lr_; }

 private:
  double lr_, momentum_;
  ParamVector velocity_;
};

}  // namespace apts
