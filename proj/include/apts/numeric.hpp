#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "apts/errors.hpp"

namespace apts {

enum class Norm { L2, Linf };

/// Flat vector of optimization variables.
///
/// The length is fixed at construction. Entries are checked for finiteness
/// when the vector is built from external data; element access is unchecked
/// so that hot loops stay cheap, and library routines that produce updates
/// re-validate through `require_finite`.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t n, double fill = 0.0);
  explicit ParamVector(std::vector<double> values);
  ParamVector(std::initializer_list<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  const std::vector<double>& values() const noexcept { return values_; }

  bool all_finite() const noexcept;

  ParamVector& operator+=(const ParamVector& other);
  ParamVector& operator-=(const ParamVector& other);
  ParamVector& operator*=(double alpha) noexcept;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

ParamVector operator+(ParamVector lhs, const ParamVector& rhs);
ParamVector operator-(ParamVector lhs, const ParamVector& rhs);
ParamVector operator*(double alpha, ParamVector v);

/// alpha * x + y. Throws DimensionError on length mismatch.
ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y);

double dot(const ParamVector& x, const ParamVector& y);

/// Throws DimensionError for an empty vector.
double norm(const ParamVector& v, Norm kind);

/// Throws NonFiniteError naming `what` when any entry is NaN or infinite.
void require_finite(const ParamVector& v, const char* what);

void require_same_size(std::size_t a, std::size_t b, const char* what);

}  // namespace apts
