#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "apts/network.hpp"

namespace fixtures {

inline std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

/// Random classification data set with `samples` rows.
inline std::shared_ptr<apts::Dataset> random_classification(std::mt19937_64& rng, std::size_t samples,
                                                            std::size_t inputs, std::size_t classes) {
  auto ds = std::make_shared<apts::Dataset>();
  ds->name = "random";
  ds->classes = classes;
  ds->inputs.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(inputs));
  const auto values = random_values(rng, samples * inputs);
  std::copy(values.begin(), values.end(), ds->inputs.data());
  std::uniform_int_distribution<int> label(0, static_cast<int>(classes) - 1);
  for (std::size_t i = 0; i < samples; ++i) ds->labels.push_back(label(rng));
  return ds;
}

/// Random regression data set for the squared-error head.
inline std::shared_ptr<apts::Dataset> random_regression(std::mt19937_64& rng, std::size_t samples, std::size_t inputs,
                                                        std::size_t outputs) {
  auto ds = std::make_shared<apts::Dataset>();
  ds->name = "random-regression";
  ds->inputs.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(inputs));
  ds->targets.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(outputs));
  auto a = random_values(rng, samples * inputs);
  auto b = random_values(rng, samples * outputs);
  std::copy(a.begin(), a.end(), ds->inputs.data());
  std::copy(b.begin(), b.end(), ds->targets.data());
  return ds;
}

/// Random MLP with 1 to `max_layers` layers (at least 2), widths in [1, max_width].
inline apts::MlpSpec random_spec(std::mt19937_64& rng, std::size_t max_layers, std::size_t max_width, bool softmax) {
  std::uniform_int_distribution<std::size_t> layers(2, max_layers);
  std::uniform_int_distribution<std::size_t> width(1, max_width);
  std::uniform_int_distribution<int> act(0, 1);
  apts::MlpSpec spec;
  const std::size_t l = layers(rng);
  for (std::size_t i = 0; i <= l; ++i) spec.layer_sizes.push_back(width(rng));
  if (softmax && spec.layer_sizes.back() < 2) spec.layer_sizes.back() = 2;
  for (std::size_t i = 0; i + 1 < l; ++i) {
    spec.activations.push_back(act(rng) == 0 ? apts::Activation::tanh : apts::Activation::relu);
  }
  spec.activations.push_back(softmax ? apts::Activation::softmax_xent : apts::Activation::identity);
  return spec;
}

inline apts::ParamVector random_theta(std::mt19937_64& rng, std::size_t n, double scale = 0.5) {
  return apts::ParamVector(random_values(rng, n, scale));
}

}  // namespace fixtures
