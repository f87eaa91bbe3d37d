// SPDX-License-Identifier: Apache-2.0
//
// Lloyd's k-means with a blocked assignment step.
//
// The assignment step walks the (point block x centroid block) grid along a
// space-filling curve. Each tuple yields, for every point of its point block,
// the nearest centroid of its centroid block; candidates are reduced with the
// order (distance, centroid id), so ties go to the lowest id exactly as in a
// plain ascending scan. Centroid sums run over points in ascending id order,
// so the blocked path and the naive reference produce identical assignments
// iteration by iteration.

#pragma once

#include "sfcloops/curve.hpp"
#include "sfcloops/loop_engine.hpp"
#include "sfcloops/point_set.hpp"

#include <cstdint>
#include <vector>

namespace sfcloops {

struct KMeansIteration {
  std::vector<std::uint32_t> assignments;
  double inertia = 0.0;
};

struct KMeansModel {
  std::size_t k = 0;
  std::size_t dims = 0;
  std::vector<double> centroids;           // k x dims, row-major
  std::vector<std::uint32_t> assignments;  // from the last assignment step
  double inertia = 0.0;                    // from the last assignment step
  int iterations = 0;
  bool converged = false;
  std::vector<KMeansIteration> history;    // filled when requested
  ScheduleReport schedule;                 // last assignment step

  std::span<const double> centroid(std::size_t c) const { return {centroids.data() + c * dims, dims}; }
};

struct KMeansOptions {
  std::size_t k = 2;
  int max_iters = 100;
  double tol = 0.0;
  std::uint64_t seed = 1;
  CurveFamily curve = CurveFamily::Hilbert;
  int workers = 1;
  int point_block_bits = 8;
  int centroid_block_bits = 2;
  int granule_bits = 2;
  bool record_history = false;
};

/// k distinct point ids drawn by partial Fisher-Yates with Xorshift64Star(seed).
std::vector<std::uint32_t> kmeans_init(std::size_t n, std::size_t k, std::uint64_t seed);

KMeansModel kmeans(const PointSet& points, const KMeansOptions& options);

/// Single-loop Lloyd reference with the same initialization, tie rule,
/// update step and stopping rule.
KMeansModel naive_kmeans(const PointSet& points, const KMeansOptions& options);

}  // namespace sfcloops
