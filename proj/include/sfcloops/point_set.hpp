// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sfcloops {

inline constexpr std::size_t kMaxPointDims = 64;

/// n points of dimension d, row-major. Row index = point id.
class PointSet {
 public:
  PointSet() = default;
  /// Throws ContractError unless 1 <= d <= 64, values.size() == n * d and every
  /// value is finite.
  PointSet(std::size_t n, std::size_t d, std::vector<double> values);

  std::size_t size() const { return n_; }
  std::size_t dims() const { return d_; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * d_, d_}; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * d_ + j]; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 1;
  std::vector<double> values_;
};

/// Squared Euclidean distance, summed over dimensions in ascending order.
/// Every kernel and oracle uses this summation order so that results agree
/// bit-for-bit.
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

}  // namespace sfcloops
