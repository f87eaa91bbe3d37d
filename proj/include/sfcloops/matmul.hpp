// SPDX-License-Identifier: Apache-2.0
//
// Blocked matrix multiplication driven by a space-filling curve.
//
// Blocks are 2^B x 2^B. With a two-dimensional curve the (I, J) block grid is
// walked along the curve and K runs ascending inside each tuple; with a
// three-dimensional curve the (I, J, K) grid is walked and the block partial
// products are added into C in ascending K afterwards. Either way every entry
// of C is the same sum of the same per-block partial sums, so the result is
// bit-identical across curves, curve dimensions and worker counts.

#pragma once

#include "sfcloops/curve.hpp"
#include "sfcloops/loop_engine.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace sfcloops {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct MatmulOptions {
  CurveFamily curve = CurveFamily::Hilbert;
  int curve_dims = 2;  // 2: (I, J) with inner K; 3: (I, J, K)
  int workers = 1;
  int block_bits = 5;
  int granule_bits = 2;
};

struct MatmulResult {
  Matrix product;
  ScheduleReport schedule;
};

MatmulResult matmul(const Matrix& a, const Matrix& b, const MatmulOptions& options = {});

/// Triple loop i, j, k with k ascending.
Matrix naive_matmul(const Matrix& a, const Matrix& b);

/// max |x - ref| / max |ref| (absolute difference when ref is all zeros).
double max_relative_error(const Matrix& x, const Matrix& ref);

}  // namespace sfcloops
