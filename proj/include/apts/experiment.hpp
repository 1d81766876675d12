#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "apts/config.hpp"

namespace apts {

inline constexpr const char* kCsvHeader = "seed,epoch,train_loss,train_accuracy,delta_G,accepted_ratio,wall_time_s";

struct MetricsRow {
  std::string seed;  // run seed, or "mean"
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double delta_g = 0.0;         // radius after the epoch; 0 for adam / sgd
  double accepted_ratio = 0.0;  // accepted steps / steps in the epoch
  double wall_time_s = 0.0;     // cumulative since the start of the run
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct ExperimentResult {
  bool ok = true;
  std::string error;
  std::vector<MetricsRow> rows;  // per-seed rows then mean rows
  std::string summary;
};

/// Runs one training run per seed, writes the CSV to cfg.output and
/// returns the rows. A failing run stops the experiment: the rows produced
/// so far are written, followed by an `error` marker row, and `ok` is false.
ExperimentResult run_experiment(const RunConfig& cfg);

/// Formats a row the way run_experiment writes it.
std::string format_row(const MetricsRow& row, bool with_validation);

struct CompareReport {
  std::string table;
  std::size_t differences = 0;  // (epoch, column) cells that differ from the first file
  std::vector<long> crossing_epoch;  // first epoch with mean accuracy >= 0.9, or -1
};

/// Aligns the mean rows of several CSV files. Throws AlignmentError when the
/// epoch grids differ and FormatError for unreadable files.
CompareReport compare_report(const std::vector<std::filesystem::path>& csv_paths);

/// Max relative error between backward() and central differences for a
/// random network of the given shape ("4-8-3") on random data.
double gradient_check(const std::string& model, std::uint64_t seed, std::ostream* log = nullptr);

}  // namespace apts
