#include "apts/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace apts {

ParamVector::ParamVector(std::size_t n, double fill) : values_(n, fill) {
  require_finite(*this, "ParamVector fill value");
}

ParamVector::ParamVector(std::vector<double> values) : values_(std::move(values)) {
  require_finite(*this, "ParamVector");
}

ParamVector::ParamVector(std::initializer_list<double> values) : values_(values) {
  require_finite(*this, "ParamVector");
}

bool ParamVector::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ParamVector& ParamVector::operator+=(const ParamVector& other) {
  require_same_size(size(), other.size(), "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& other) {
  require_same_size(size(), other.size(), "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

ParamVector& ParamVector::operator*=(double alpha) noexcept {
  for (double& v : values_) v *= alpha;
  return *this;
}

ParamVector operator+(ParamVector lhs, const ParamVector& rhs) { return lhs += rhs; }
ParamVector operator-(ParamVector lhs, const ParamVector& rhs) { return lhs -= rhs; }
ParamVector operator*(double alpha, ParamVector v) { return v *= alpha; }

ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y) {
  require_same_size(x.size(), y.size(), "axpy");
  ParamVector out = y;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += alpha * x[i];
  return out;
}

double dot(const ParamVector& x, const ParamVector& y) {
  require_same_size(x.size(), y.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double norm(const ParamVector& v, Norm kind) {
  if (v.empty()) throw DimensionError("norm of an empty vector");
  if (kind == Norm::Linf) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  // scaled sum of squares, avoids overflow for large entries
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (double x : v) {
    const double r = x / scale;
    acc += r * r;
  }
  return scale * std::sqrt(acc);
}

void require_finite(const ParamVector& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw NonFiniteError(std::string(what) + ": non-finite entry at index " + std::to_string(i));
    }
  }
}

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": length " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace apts
