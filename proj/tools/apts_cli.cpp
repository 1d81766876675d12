#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "apts/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Trust-region training harness: run experiments, compare CSV results, check gradients"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::uint64_t> seed_override;
  std::size_t epochs = 0;
  std::string output;
  auto* run = app.add_subcommand("run", "Run the experiment described by a key=value config file");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed-override", seed_override, "Replace the config's seed list")->delimiter(',');
  auto* epochs_opt = run->add_option("--epochs", epochs, "Replace the config's epoch count");
  run->add_option("--output", output, "Replace the config's CSV path");

  std::vector<std::string> csvs;
  auto* compare = app.add_subcommand("compare", "Align mean rows of two or more result CSVs");
  compare->add_option("csv", csvs, "Result CSV files")->required()->expected(2, -1);

  std::string model;
  std::uint64_t gc_seed = 0;
  double tolerance = 1e-5;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare backprop with central differences on a random net");
  gradcheck->add_option("model", model, "Layer sizes, e.g. 4-8-3")->required();
  gradcheck->add_option("--seed", gc_seed, "Random seed");
  gradcheck->add_option("--tolerance", tolerance, "Largest accepted relative error");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = apts::parse_config(config_path);
      if (!seed_override.empty()) cfg.seeds = seed_override;
      if (*epochs_opt) cfg.epochs = epochs;
      if (!output.empty()) cfg.output = output;
      const auto result = apts::run_experiment(cfg);
      std::cout << result.summary << '\n';
      if (!result.ok) {
        std::cerr << "error: " << result.error << '\n';
        return 1;
      }
      return 0;
    }
    if (*compare) {
      std::vector<std::filesystem::path> paths(csvs.begin(), csvs.end());
      std::cout << apts::compare_report(paths).table;
      return 0;
    }
    if (*gradcheck) {
      const double err = apts::gradient_check(model, gc_seed, &std::cout);
      return err < tolerance ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
