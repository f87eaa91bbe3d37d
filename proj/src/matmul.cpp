// SPDX-License-Identifier: Apache-2.0

#include "sfcloops/matmul.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <variant>

namespace sfcloops {

namespace {

struct BlockGrid {
  std::size_t block = 0;
  std::size_t rows = 0;   // blocks along I
  std::size_t cols = 0;   // blocks along J
  std::size_t inner = 0;  // blocks along K
};

// tmp = A[I, K] * B[K, J], tmp laid out with row stride `block`.
void block_product(const Matrix& a, const Matrix& b, std::size_t bi, std::size_t bj, std::size_t bk,
                   std::size_t block, std::vector<double>& tmp) {
  const std::size_t i0 = bi * block, i1 = std::min(a.rows(), i0 + block);
  const std::size_t j0 = bj * block, j1 = std::min(b.cols(), j0 + block);
  const std::size_t k0 = bk * block, k1 = std::min(a.cols(), k0 + block);
  tmp.assign(block * block, 0.0);
  for (std::size_t i = i0; i < i1; ++i) {
    double* out = &tmp[(i - i0) * block];
    for (std::size_t k = k0; k < k1; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = j0; j < j1; ++j) out[j - j0] += aik * b(k, j);
    }
  }
}

void add_block(Matrix& c, std::size_t bi, std::size_t bj, std::size_t block, const std::vector<double>& tmp) {
  const std::size_t i0 = bi * block, i1 = std::min(c.rows(), i0 + block);
  const std::size_t j0 = bj * block, j1 = std::min(c.cols(), j0 + block);
  for (std::size_t i = i0; i < i1; ++i) {
    for (std::size_t j = j0; j < j1; ++j) c(i, j) += tmp[(i - i0) * block + (j - j0)];
  }
}

struct Partial {
  std::tuple<Coord, Coord, Coord> key;  // (I, J, K)
  std::vector<double> block;
};

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols) : Matrix(rows, cols, std::vector<double>(rows * cols, 0.0)) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows < 1 || cols < 1) throw ContractError("matrix dimensions must be at least 1");
  if (values_.size() != rows * cols) {
    throw ContractError("matrix expects " + std::to_string(rows * cols) + " values, got " +
                        std::to_string(values_.size()));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

MatmulResult matmul(const Matrix& a, const Matrix& b, const MatmulOptions& options) {
  if (a.cols() != b.rows()) {
    throw ContractError("shape mismatch: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " * " +
                        std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  if (options.curve_dims != 2 && options.curve_dims != 3) throw ContractError("curve_dims must be 2 or 3");
  if (options.block_bits < 0 || options.block_bits > 12) throw ContractError("block bits must lie in [0, 12]");

  BlockGrid grid;
  grid.block = std::size_t{1} << options.block_bits;
  grid.rows = (a.rows() + grid.block - 1) / grid.block;
  grid.cols = (b.cols() + grid.block - 1) / grid.block;
  grid.inner = (a.cols() + grid.block - 1) / grid.block;

  MatmulResult result{Matrix(a.rows(), b.cols()), {}};
  const ExecOptions exec{options.workers, options.granule_bits, true};

  if (options.curve_dims == 2) {
    const LoopDomain domain =
        LoopDomain::make({static_cast<Coord>(grid.rows), static_cast<Coord>(grid.cols)});
    const CurveSpec spec = embed(domain, options.curve);
    Matrix& c = result.product;
    // Each (I, J) tuple owns block C[I, J]; no two tuples write the same entry.
    auto visit = [&](const GridPoint& p, std::monostate&) {
      std::vector<double> tmp;
      for (std::size_t bk = 0; bk < grid.inner; ++bk) {
        block_product(a, b, p[0], p[1], bk, grid.block, tmp);
        add_block(c, p[0], p[1], grid.block, tmp);
      }
    };
    auto run = parallel_execute(domain, spec, exec, [] { return std::monostate{}; }, visit,
                                [](std::monostate&, std::monostate&&) {});
    result.schedule = std::move(run.report);
    return result;
  }

  if (options.curve == CurveFamily::Peano) throw ContractError("peano curves are two-dimensional");
  const LoopDomain domain = LoopDomain::make(
      {static_cast<Coord>(grid.rows), static_cast<Coord>(grid.cols), static_cast<Coord>(grid.inner)});
  const CurveSpec spec = embed(domain, options.curve);
  auto visit = [&](const GridPoint& p, std::vector<Partial>& acc) {
    Partial part{{p[0], p[1], p[2]}, {}};
    block_product(a, b, p[0], p[1], p[2], grid.block, part.block);
    acc.push_back(std::move(part));
  };
  auto merge = [](std::vector<Partial>& into, std::vector<Partial>&& from) {
    for (auto& part : from) into.push_back(std::move(part));
  };
  auto run = parallel_execute(domain, spec, exec, [] { return std::vector<Partial>{}; }, visit, merge);

  auto& parts = run.value;
  std::sort(parts.begin(), parts.end(), [](const Partial& x, const Partial& y) { return x.key < y.key; });
  for (const auto& part : parts) {
    add_block(result.product, std::get<0>(part.key), std::get<1>(part.key), grid.block, part.block);
  }
  result.schedule = std::move(run.report);
  return result;
}

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ContractError("shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

double max_relative_error(const Matrix& x, const Matrix& ref) {
  if (x.rows() != ref.rows() || x.cols() != ref.cols()) throw ContractError("shape mismatch");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < ref.values().size(); ++i) {
    diff = std::max(diff, std::abs(x.values()[i] - ref.values()[i]));
    scale = std::max(scale, std::abs(ref.values()[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace sfcloops
