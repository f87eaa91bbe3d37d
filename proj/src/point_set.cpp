// SPDX-License-Identifier: Apache-2.0

#include "sfcloops/point_set.hpp"

#include "sfcloops/curve.hpp"

#include <cmath>
#include <string>

namespace sfcloops {

PointSet::PointSet(std::size_t n, std::size_t d, std::vector<double> values)
    : n_(n), d_(d), values_(std::move(values)) {
  if (d < 1 || d > kMaxPointDims) {
    throw ContractError("point dimension must lie in [1, 64], got " + std::to_string(d));
  }
  if (values_.size() != n * d) {
    throw ContractError("expected " + std::to_string(n * d) + " values, got " + std::to_string(values_.size()));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ContractError("non-finite value at point " + std::to_string(i / d) + ", dimension " +
                          std::to_string(i % d));
    }
  }
}

}  // namespace sfcloops
