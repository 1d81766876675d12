#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "apts/apts.hpp"
#include "apts/data.hpp"
#include "apts/iapts.hpp"
#include "apts/network.hpp"

namespace apts {

enum class OptimizerId { adam, sgd, tr, apts, iapts };
enum class DatasetId { two_moons, mnist_idx };
enum class Timing { wall, none };

OptimizerId parse_optimizer(const std::string& name);
std::string to_string(OptimizerId id);

/// One experiment: model, data, optimizer settings and the seed list.
struct RunConfig {
  OptimizerId optimizer = OptimizerId::adam;
  DatasetId dataset = DatasetId::two_moons;

  std::string model;  // layer sizes, e.g. "2-16-16-2"; empty picks a default for the dataset
  Activation activation = Activation::tanh;
  Activation head = Activation::softmax_xent;

  std::size_t dataset_size = 1000;  // two_moons sample count; for IDX data 0 keeps every sample
  double noise = 0.1;
  std::uint64_t data_seed = 0;
  std::filesystem::path images;
  std::filesystem::path labels;
  double validation_split = 0.0;  // > 0 adds val_loss / val_accuracy columns

  std::size_t batch_size = 0;  // 0 means full batch
  BatchMode batch_mode = BatchMode::shuffled;
  std::size_t epochs = 10;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output = "run.csv";
  Timing timing = Timing::wall;

  double lr = 0.0025;  // Adam / SGD step size
  double momentum = 0.9;

  double delta_init = 0.1;  // tr / apts initial radius
  AptsConfig apts;
  IaptsConfig iapts;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
  MlpSpec model_spec() const;
};

/// Parses a flat `key = value` file; `#` starts a comment. Unknown keys,
/// unparsable values and missing required keys (optimizer, dataset) raise
/// ConfigError naming the key and line.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>");

}  // namespace apts
