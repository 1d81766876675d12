#pragma once

#include <cstddef>
#include <vector>

#include "apts/network.hpp"
#include "apts/numeric.hpp"

namespace apts {

/// Non-overlapping partition of {0, ..., n-1} into subdomains. Restriction
/// and prolongation are applied through the stored index sets.
class Partition {
 public:
  /// Throws DomainError unless the subsets are nonempty, pairwise disjoint
  /// and cover [0, n). Indices inside each subset are sorted.
  Partition(std::size_t n, std::vector<std::vector<std::size_t>> subsets);

  std::size_t dim() const noexcept { return n_; }
  std::size_t subdomain_count() const noexcept { return subsets_.size(); }
  const std::vector<std::size_t>& indices(std::size_t d) const;
  std::size_t subdomain_dim(std::size_t d) const { return indices(d).size(); }
  const std::vector<std::vector<std::size_t>>& subsets() const noexcept { return subsets_; }

 private:
  std::size_t n_;
  std::vector<std::vector<std::size_t>> subsets_;
};

/// Components of theta at the indices of subdomain d, in ascending order.
ParamVector restrict_to(const Partition& p, std::size_t d, const ParamVector& theta);

/// Scatters v into a zero vector of length n at the indices of subdomain d.
ParamVector prolong(const Partition& p, std::size_t d, const ParamVector& v);

/// Contiguous ranges; the first n % N blocks get one extra index.
Partition make_even_partition(std::size_t n, std::size_t subdomains);

/// Groups of consecutive layers, chosen to minimize the largest group's
/// parameter count. `layer_groups` receives [first, last] per group.
Partition make_layer_partition(const std::vector<LayerSlice>& slices, std::size_t subdomains,
                               std::vector<std::pair<std::size_t, std::size_t>>* layer_groups = nullptr);

}  // namespace apts
