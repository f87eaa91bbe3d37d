// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic point sets.

#pragma once

#include "sfcloops/point_set.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sfcloops {

enum class Generator { UniformCube, GaussianMixture, SignalWindows };

std::string_view to_string(Generator g);
/// "uniform", "mixture" or "signal".
Generator parse_generator(std::string_view name);

struct DatasetSpec {
  Generator generator = Generator::UniformCube;
  std::size_t n = 1000;
  std::size_t d = 2;
  std::uint64_t seed = 1;

  // mixture: point i belongs to cluster i % clusters; centers uniform in [0, spread)^d
  std::size_t clusters = 4;
  double sigma = 0.05;
  double spread = 1.0;

  // signal: sum of unit sinusoids with the given periods (in samples),
  // row i is the window of d samples starting at i * stride
  std::vector<double> periods = {50.0};
  double noise = 0.0;
  std::size_t stride = 1;
};

struct Dataset {
  PointSet points;
  std::vector<double> centers;  // clusters x d for mixtures, else empty
};

/// Throws ContractError on invalid parameters.
Dataset generate(const DatasetSpec& spec);

}  // namespace sfcloops
