// SPDX-License-Identifier: Apache-2.0

#include "sfcloops/dataset.hpp"

#include "sfcloops/curve.hpp"
#include "sfcloops/rng.hpp"

#include <cmath>
#include <numbers>

namespace sfcloops {

std::string_view to_string(Generator g) {
  switch (g) {
    case Generator::UniformCube: return "uniform";
    case Generator::GaussianMixture: return "mixture";
    case Generator::SignalWindows: return "signal";
  }
  return "?";
}

Generator parse_generator(std::string_view name) {
  if (name == "uniform") return Generator::UniformCube;
  if (name == "mixture") return Generator::GaussianMixture;
  if (name == "signal") return Generator::SignalWindows;
  throw ContractError("unknown generator '" + std::string(name) + "' (expected uniform, mixture or signal)");
}

Dataset generate(const DatasetSpec& spec) {
  if (spec.n < 1) throw ContractError("n must be at least 1");
  if (spec.d < 1 || spec.d > kMaxPointDims) throw ContractError("d must lie in [1, 64]");
  Xorshift64Star rng(spec.seed);
  std::vector<double> values(spec.n * spec.d);
  Dataset out;

  switch (spec.generator) {
    case Generator::UniformCube:
      for (auto& v : values) v = rng.uniform();
      break;

    case Generator::GaussianMixture: {
      if (spec.clusters < 1) throw ContractError("clusters must be at least 1");
      if (!(spec.sigma >= 0.0) || !(spec.spread > 0.0)) throw ContractError("sigma must be >= 0 and spread > 0");
      out.centers.resize(spec.clusters * spec.d);
      for (auto& c : out.centers) c = rng.uniform() * spec.spread;
      for (std::size_t i = 0; i < spec.n; ++i) {
        const double* center = &out.centers[(i % spec.clusters) * spec.d];
        for (std::size_t j = 0; j < spec.d; ++j) values[i * spec.d + j] = center[j] + spec.sigma * rng.normal();
      }
      break;
    }

    case Generator::SignalWindows: {
      if (spec.periods.empty()) throw ContractError("signal needs at least one period");
      for (double p : spec.periods) {
        if (!(p > 0.0) || !std::isfinite(p)) throw ContractError("periods must be positive");
      }
      if (spec.stride < 1) throw ContractError("stride must be at least 1");
      if (!(spec.noise >= 0.0)) throw ContractError("noise must be >= 0");
      for (std::size_t i = 0; i < spec.n; ++i) {
        for (std::size_t j = 0; j < spec.d; ++j) {
          const double t = static_cast<double>(i * spec.stride + j);
          double s = 0.0;
          for (double p : spec.periods) s += std::sin(2.0 * std::numbers::pi * (std::fmod(t, p) / p));
          if (spec.noise > 0.0) s += spec.noise * rng.normal();
          values[i * spec.d + j] = s;
        }
      }
      break;
    }
  }
  out.points = PointSet(spec.n, spec.d, std::move(values));
  return out;
}

}  // namespace sfcloops
