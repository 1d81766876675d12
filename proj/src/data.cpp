#include "apts/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

namespace apts {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset, const std::filesystem::path& path) {
  if (offset + 4 > buf.size()) {
    throw FormatError(path.string() + ": truncated header at byte offset " + std::to_string(offset));
  }
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                         static_cast<char>(v)};
  out.write(bytes, 4);
}

void require_payload(const std::vector<std::uint8_t>& buf, std::size_t offset, std::size_t len,
                     const std::filesystem::path& path) {
  if (offset + len > buf.size()) {
    throw FormatError(path.string() + ": truncated payload at byte offset " + std::to_string(buf.size()) +
                      ", expected " + std::to_string(offset + len) + " bytes");
  }
}

}  // namespace

void Dataset::validate() const {
  const auto m = size();
  if (is_classification()) {
    if (labels.size() != m) throw DimensionError("dataset: label count differs from input rows");
    for (int l : labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= classes) throw DomainError("dataset: label out of range");
    }
  } else if (static_cast<std::size_t>(targets.rows()) != m) {
    throw DimensionError("dataset: target rows differ from input rows");
  }
}

Dataset two_moons(std::size_t samples, double noise, std::uint64_t seed) {
  if (samples == 0 || samples % 2 != 0) throw DomainError("two_moons: sample count must be even and positive");
  if (!(noise >= 0.0)) throw DomainError("two_moons: noise must be nonnegative");

  const std::size_t half = samples / 2;
  Matrix points(samples, 2);
  std::vector<int> labels(samples);
  for (std::size_t i = 0; i < half; ++i) {
    const double t = half > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(half - 1) : 0.0;
    points(i, 0) = std::cos(t);
    points(i, 1) = std::sin(t);
    labels[i] = 0;
    points(half + i, 0) = 1.0 - std::cos(t);
    points(half + i, 1) = 0.5 - std::sin(t);
    labels[half + i] = 1;
  }

  std::mt19937_64 rng(seed);
  if (noise > 0.0) {
    std::normal_distribution<double> gauss(0.0, noise);
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
      points(r, 0) += gauss(rng);
      points(r, 1) += gauss(rng);
    }
  }

  std::vector<std::size_t> order(samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  Dataset ds;
  ds.name = "two_moons";
  ds.seed = seed;
  ds.classes = 2;
  ds.inputs.resize(samples, 2);
  ds.labels.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    ds.inputs.row(i) = points.row(order[i]);
    ds.labels[i] = labels[order[i]];
  }
  return ds;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_file(images);
  const auto lab = read_file(labels);

  if (read_be32(img, 0, images) != kImageMagic) throw FormatError(images.string() + ": bad IDX3 magic number");
  if (read_be32(lab, 0, labels) != kLabelMagic) throw FormatError(labels.string() + ": bad IDX1 magic number");

  const std::size_t count = read_be32(img, 4, images);
  const std::size_t rows = read_be32(img, 8, images);
  const std::size_t cols = read_be32(img, 12, images);
  const std::size_t label_count = read_be32(lab, 4, labels);
  if (count != label_count) {
    throw FormatError("IDX image count " + std::to_string(count) + " differs from label count " +
                      std::to_string(label_count));
  }

  const std::size_t pixels = rows * cols;
  require_payload(img, 16, count * pixels, images);
  require_payload(lab, 8, count, labels);

  Dataset ds;
  ds.name = images.filename().string();
  ds.classes = 10;
  ds.inputs.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  ds.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < pixels; ++j) {
      ds.inputs(i, j) = static_cast<double>(img[16 + i * pixels + j]) / 255.0;
    }
    const int label = lab[8 + i];
    if (label > 9) throw FormatError(labels.string() + ": label " + std::to_string(label) + " at byte offset " +
                                     std::to_string(8 + i) + " outside 0-9");
    ds.labels[i] = label;
  }
  return ds;
}

void write_idx(const Dataset& ds, std::size_t rows, std::size_t cols, const std::filesystem::path& images,
               const std::filesystem::path& labels) {
  if (!ds.is_classification()) throw DomainError("write_idx: dataset has no class labels");
  if (rows * cols != ds.input_dim()) throw DimensionError("write_idx: rows*cols differs from input width");

  std::ofstream img(images, std::ios::binary);
  std::ofstream lab(labels, std::ios::binary);
  if (!img || !lab) throw FormatError("write_idx: cannot open output files");

  write_be32(img, kImageMagic);
  write_be32(img, static_cast<std::uint32_t>(ds.size()));
  write_be32(img, static_cast<std::uint32_t>(rows));
  write_be32(img, static_cast<std::uint32_t>(cols));
  std::vector<char> payload(ds.size() * ds.input_dim());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.input_dim(); ++j) {
      const double v = std::clamp(std::round(ds.inputs(i, j) * 255.0), 0.0, 255.0);
      payload[i * ds.input_dim() + j] = static_cast<char>(static_cast<std::uint8_t>(v));
    }
  }
  img.write(payload.data(), static_cast<std::streamsize>(payload.size()));

  write_be32(lab, kLabelMagic);
  write_be32(lab, static_cast<std::uint32_t>(ds.size()));
  for (int l : ds.labels) lab.put(static_cast<char>(l));
}

Dataset head(const Dataset& ds, std::size_t count) {
  if (count == 0 || count > ds.size()) throw DomainError("head: count out of range");
  Dataset out = ds;
  out.inputs = ds.inputs.topRows(static_cast<Eigen::Index>(count));
  if (ds.is_classification()) out.labels.resize(count);
  if (ds.targets.rows() > 0) out.targets = ds.targets.topRows(static_cast<Eigen::Index>(count));
  return out;
}

std::pair<Dataset, Dataset> split_tail(const Dataset& ds, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DomainError("split_tail: fraction must be in (0, 1)");
  const auto held = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(ds.size())));
  if (held == 0 || held >= ds.size()) throw DomainError("split_tail: split leaves an empty part");
  const auto kept = ds.size() - held;

  Dataset train = head(ds, kept);
  Dataset val = ds;
  val.name = ds.name + ":validation";
  val.inputs = ds.inputs.bottomRows(static_cast<Eigen::Index>(held));
  if (ds.is_classification()) val.labels.assign(ds.labels.begin() + static_cast<std::ptrdiff_t>(kept), ds.labels.end());
  if (ds.targets.rows() > 0) val.targets = ds.targets.bottomRows(static_cast<Eigen::Index>(held));
  return {std::move(train), std::move(val)};
}

std::vector<BatchRef> batches(std::size_t dataset_size, const BatchSchedule& schedule, std::size_t epoch) {
  if (dataset_size == 0) throw DomainError("batches: empty dataset");
  if (schedule.mode == BatchMode::full) return {BatchRef::full()};
  if (schedule.batch_size == 0 || schedule.batch_size > dataset_size) {
    throw DomainError("batches: batch size must be in [1, dataset size]");
  }

  std::vector<std::size_t> order(dataset_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (schedule.mode == BatchMode::shuffled) {
    std::seed_seq seq{static_cast<std::uint32_t>(schedule.seed), static_cast<std::uint32_t>(schedule.seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
  }

  std::vector<BatchRef> out;
  for (std::size_t start = 0; start < dataset_size; start += schedule.batch_size) {
    const auto stop = std::min(dataset_size, start + schedule.batch_size);
    out.push_back(BatchRef::of(std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                        order.begin() + static_cast<std::ptrdiff_t>(stop))));
  }
  return out;
}

Matrix gather_rows(const Matrix& m, const BatchRef& batch) {
  if (batch.is_full()) return m;
  batch.validate(static_cast<std::size_t>(m.rows()));
  Matrix out(static_cast<Eigen::Index>(batch.indices().size()), m.cols());
  for (std::size_t i = 0; i < batch.indices().size(); ++i) out.row(i) = m.row(batch.indices()[i]);
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels, const BatchRef& batch) {
  if (batch.is_full()) return labels;
  batch.validate(labels.size());
  std::vector<int> out;
  out.reserve(batch.indices().size());
  for (std::size_t i : batch.indices()) out.push_back(labels[i]);
  return out;
}

}  // namespace apts
