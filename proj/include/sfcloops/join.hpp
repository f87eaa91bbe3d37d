// SPDX-License-Identifier: Apache-2.0
//
// Epsilon similarity join over the epsilon grid order.
//
// Points are sorted by their grid cell vectors floor(x / eps), cut into blocks
// of 2^B consecutive points, and the upper-triangular block-pair domain is
// walked along a space-filling curve. A block pair is skipped when, in some
// dimension, the cell ranges of the two blocks are more than one cell apart:
// any two points in such cells are further than eps apart in that dimension
// alone. Surviving pairs go through a dimension-major distance kernel.
//
// Pairs are reported once with i < j; the threshold is inclusive.

#pragma once

#include "sfcloops/curve.hpp"
#include "sfcloops/loop_engine.hpp"
#include "sfcloops/point_set.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace sfcloops {

struct JoinPair {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double dist = 0.0;

  friend bool operator==(const JoinPair&, const JoinPair&) = default;
};

struct JoinStats {
  std::size_t blocks = 0;
  std::size_t block_pairs = 0;  // pairs that reached the distance kernel
  std::size_t pruned_pairs = 0;
  /// Pruned (block, block) pairs, filled only with JoinOptions::record_pruned.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pruned;
};

struct JoinResult {
  std::vector<JoinPair> pairs;  // sorted by (i, j)
  JoinStats stats;
  ScheduleReport schedule;
};

struct EgoOrder {
  double eps = 0.0;
  std::vector<std::uint32_t> order;  // point ids in grid order
  std::vector<int> dim_order;        // dimension significance used for sorting
};

struct JoinOptions {
  CurveFamily curve = CurveFamily::Hilbert;
  int workers = 1;
  int block_bits = 8;    // points per block = 2^block_bits
  int granule_bits = 2;  // loop-engine scheduling granule over block pairs
  bool reorder_dims = false;  // sort dimensions by descending variance first
  bool record_pruned = false;
};

/// Cell vectors floor(x / eps), one row per point, columns in `dim_order`.
std::vector<double> ego_cells(const PointSet& points, double eps, std::span<const int> dim_order);

/// Lexicographic strict order on cell vectors.
bool ego_less(std::span<const double> a, std::span<const double> b);

/// Dimensions sorted by descending variance (ties by index).
std::vector<int> variance_dim_order(const PointSet& points);

/// Stable sort of point ids by cell vector. Throws ContractError for eps <= 0.
EgoOrder ego_order(const PointSet& points, double eps, bool reorder_dims = false);

JoinResult epsilon_join(const PointSet& points, double eps, const JoinOptions& options = {});

/// Double loop over i < j.
JoinResult naive_join(const PointSet& points, double eps);

}  // namespace sfcloops
