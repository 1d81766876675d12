#include "apts/decomposition.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace apts {

Partition::Partition(std::size_t n, std::vector<std::vector<std::size_t>> subsets)
    : n_(n), subsets_(std::move(subsets)) {
  if (subsets_.empty()) throw DomainError("partition needs at least one subdomain");
  std::vector<char> seen(n_, 0);
  std::size_t covered = 0;
  for (std::size_t d = 0; d < subsets_.size(); ++d) {
    auto& s = subsets_[d];
    if (s.empty()) throw DomainError("partition: subdomain " + std::to_string(d) + " is empty");
    std::sort(s.begin(), s.end());
    for (std::size_t i : s) {
      if (i >= n_) throw DomainError("partition: index " + std::to_string(i) + " outside [0, n)");
      if (seen[i]) throw DomainError("partition: index " + std::to_string(i) + " assigned twice");
      seen[i] = 1;
      ++covered;
    }
  }
  if (covered != n_) throw DomainError("partition does not cover every index");
}

const std::vector<std::size_t>& Partition::indices(std::size_t d) const {
  if (d >= subsets_.size()) {
    throw RangeError("subdomain " + std::to_string(d) + " out of range (" + std::to_string(subsets_.size()) + ")");
  }
  return subsets_[d];
}

ParamVector restrict_to(const Partition& p, std::size_t d, const ParamVector& theta) {
  const auto& idx = p.indices(d);
  require_same_size(theta.size(), p.dim(), "restrict");
  ParamVector out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = theta[idx[k]];
  return out;
}

ParamVector prolong(const Partition& p, std::size_t d, const ParamVector& v) {
  const auto& idx = p.indices(d);
  require_same_size(v.size(), idx.size(), "prolong");
  ParamVector out(p.dim());
  for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = v[k];
  return out;
}

Partition make_even_partition(std::size_t n, std::size_t subdomains) {
  if (subdomains == 0 || subdomains > n) throw DomainError("even partition needs 1 <= N <= n");
  std::vector<std::vector<std::size_t>> subsets(subdomains);
  const std::size_t base = n / subdomains;
  const std::size_t extra = n % subdomains;
  std::size_t start = 0;
  for (std::size_t d = 0; d < subdomains; ++d) {
    const std::size_t len = base + (d < extra ? 1 : 0);
    subsets[d].resize(len);
    std::iota(subsets[d].begin(), subsets[d].end(), start);
    start += len;
  }
  return Partition(n, std::move(subsets));
}

Partition make_layer_partition(const std::vector<LayerSlice>& slices, std::size_t subdomains,
                               std::vector<std::pair<std::size_t, std::size_t>>* layer_groups) {
  const std::size_t layers = slices.size();
  if (subdomains == 0 || subdomains > layers) throw DomainError("layer partition needs 1 <= N <= layer count");

  // cost[g][j]: smallest achievable max-group size using g groups over the
  // first j layers. Linear-partition dynamic program.
  std::vector<std::size_t> prefix(layers + 1, 0);
  for (std::size_t i = 0; i < layers; ++i) prefix[i + 1] = prefix[i] + slices[i].size();
  constexpr auto kInf = std::numeric_limits<std::size_t>::max();
  std::vector<std::vector<std::size_t>> cost(subdomains + 1, std::vector<std::size_t>(layers + 1, kInf));
  std::vector<std::vector<std::size_t>> cut(subdomains + 1, std::vector<std::size_t>(layers + 1, 0));
  cost[0][0] = 0;
  for (std::size_t g = 1; g <= subdomains; ++g) {
    for (std::size_t j = g; j <= layers; ++j) {
      for (std::size_t i = g - 1; i < j; ++i) {
        if (cost[g - 1][i] == kInf) continue;
        const std::size_t c = std::max(cost[g - 1][i], prefix[j] - prefix[i]);
        if (c < cost[g][j]) {
          cost[g][j] = c;
          cut[g][j] = i;
        }
      }
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> groups(subdomains);
  std::size_t j = layers;
  for (std::size_t g = subdomains; g >= 1; --g) {
    const std::size_t i = cut[g][j];
    groups[g - 1] = {i, j - 1};
    j = i;
  }

  std::vector<std::vector<std::size_t>> subsets(subdomains);
  for (std::size_t d = 0; d < subdomains; ++d) {
    const std::size_t begin = slices[groups[d].first].begin();
    const std::size_t end = slices[groups[d].second].end();
    subsets[d].resize(end - begin);
    std::iota(subsets[d].begin(), subsets[d].end(), begin);
  }
  if (layer_groups) *layer_groups = groups;
  return Partition(prefix[layers], std::move(subsets));
}

}  // namespace apts
