#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "apts/matrix.hpp"
#include "apts/objective.hpp"

namespace apts {

/// Supervised dataset. Classification sets fill `labels`; regression sets
/// fill `targets` instead.
struct Dataset {
  std::string name;
  Matrix inputs;                // M x q
  std::vector<int> labels;      // M entries in [0, classes)
  Matrix targets;               // M x p, empty for classification
  std::size_t classes = 0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(inputs.cols()); }
  bool is_classification() const noexcept { return !labels.empty(); }

  /// Throws DimensionError / DomainError when the invariants do not hold.
  void validate() const;
};

/// Two interleaved half circles of unit radius with Gaussian noise.
/// Throws DomainError for odd `samples` or negative noise.
Dataset two_moons(std::size_t samples, double noise, std::uint64_t seed);

/// Reads an IDX3 image file and its IDX1 label file (MNIST layout).
/// Pixels are scaled to [0, 1]. Throws FormatError on bad magic numbers,
/// mismatched counts or truncated payloads.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Writes a classification dataset with integer pixel values in [0, 255]
/// (stored as value / 255) back to IDX files.
void write_idx(const Dataset& ds, std::size_t rows, std::size_t cols, const std::filesystem::path& images,
               const std::filesystem::path& labels);

/// Keeps the first `count` samples.
Dataset head(const Dataset& ds, std::size_t count);

/// Splits off the trailing `fraction` of samples as a held-out set.
std::pair<Dataset, Dataset> split_tail(const Dataset& ds, double fraction);

enum class BatchMode { sequential, shuffled, full };

struct BatchSchedule {
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  BatchMode mode = BatchMode::shuffled;
};

/// Batches covering every sample exactly once; deterministic in
/// (seed, epoch). The last batch may be smaller.
std::vector<BatchRef> batches(std::size_t dataset_size, const BatchSchedule& schedule, std::size_t epoch);

/// Rows of `m` selected by `batch`.
Matrix gather_rows(const Matrix& m, const BatchRef& batch);
std::vector<int> gather_labels(const std::vector<int>& labels, const BatchRef& batch);

}  // namespace apts
