// SPDX-License-Identifier: Apache-2.0

#include "sfcloops/kmeans.hpp"

#include "sfcloops/rng.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace sfcloops {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_options(const PointSet& points, const KMeansOptions& o) {
  if (o.k < 1) throw ContractError("k must be at least 1");
  if (o.k > points.size()) {
    throw ContractError("k = " + std::to_string(o.k) + " exceeds the number of points " +
                        std::to_string(points.size()));
  }
  if (!(o.tol >= 0.0)) throw ContractError("tol must be non-negative");
  if (o.max_iters < 1) throw ContractError("max_iters must be at least 1");
  if (o.workers < 1) throw ContractError("workers must be at least 1");
}

std::vector<double> seed_centroids(const PointSet& points, const KMeansOptions& o) {
  const std::size_t d = points.dims();
  std::vector<double> centroids(o.k * d);
  const auto ids = kmeans_init(points.size(), o.k, o.seed);
  for (std::size_t c = 0; c < o.k; ++c) {
    const auto row = points.row(ids[c]);
    std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * d));
  }
  return centroids;
}

// Per-cluster means in ascending point order; empty clusters keep their
// centroid. Returns the largest centroid displacement.
double update_centroids(const PointSet& points, const std::vector<std::uint32_t>& assign, std::size_t k,
                        std::vector<double>& centroids) {
  const std::size_t d = points.dims();
  std::vector<double> sums(k * d, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto row = points.row(i);
    double* s = &sums[assign[i] * d];
    for (std::size_t j = 0; j < d; ++j) s[j] += row[j];
    ++counts[assign[i]];
  }
  double shift = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    double* cen = &centroids[c * d];
    double moved = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double mean = sums[c * d + j] / static_cast<double>(counts[c]);
      moved += (mean - cen[j]) * (mean - cen[j]);
      cen[j] = mean;
    }
    shift = std::max(shift, std::sqrt(moved));
  }
  return shift;
}

struct Candidates {
  std::uint32_t block = 0;
  std::vector<double> dist;
  std::vector<std::uint32_t> id;
};

}  // namespace

std::vector<std::uint32_t> kmeans_init(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k > n) throw ContractError("cannot draw " + std::to_string(k) + " distinct points from " + std::to_string(n));
  std::vector<std::uint32_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0u);
  Xorshift64Star rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  return ids;
}

KMeansModel kmeans(const PointSet& points, const KMeansOptions& o) {
  check_options(points, o);
  const std::size_t n = points.size(), d = points.dims(), k = o.k;
  const std::size_t pbs = std::size_t{1} << o.point_block_bits;
  const std::size_t cbs = std::size_t{1} << o.centroid_block_bits;

  KMeansModel model;
  model.k = k;
  model.dims = d;
  model.centroids = seed_centroids(points, o);

  const LoopDomain domain = LoopDomain::make(
      {static_cast<Coord>((n + pbs - 1) / pbs), static_cast<Coord>((k + cbs - 1) / cbs)});
  const CurveSpec spec = embed(domain, o.curve);
  const ExecOptions exec{o.workers, o.granule_bits, true};

  std::vector<double> best(n);
  std::vector<std::uint32_t> best_id(n);

  for (int iter = 1; iter <= o.max_iters; ++iter) {
    auto visit = [&](const GridPoint& p, std::vector<Candidates>& acc) {
      const std::size_t p0 = p[0] * pbs, p1 = std::min(n, p0 + pbs);
      const std::size_t c0 = p[1] * cbs, c1 = std::min(k, c0 + cbs);
      Candidates cand;
      cand.block = p[0];
      cand.dist.resize(p1 - p0);
      cand.id.resize(p1 - p0);
      for (std::size_t i = p0; i < p1; ++i) {
        double bd = kInf;
        std::uint32_t bid = static_cast<std::uint32_t>(c0);
        for (std::size_t c = c0; c < c1; ++c) {
          const double dist = squared_distance(points.row(i), model.centroid(c));
          if (dist < bd) {
            bd = dist;
            bid = static_cast<std::uint32_t>(c);
          }
        }
        cand.dist[i - p0] = bd;
        cand.id[i - p0] = bid;
      }
      acc.push_back(std::move(cand));
    };
    auto merge = [](std::vector<Candidates>& into, std::vector<Candidates>&& from) {
      for (auto& c : from) into.push_back(std::move(c));
    };
    auto run = parallel_execute(domain, spec, exec, [] { return std::vector<Candidates>{}; }, visit, merge);

    std::fill(best.begin(), best.end(), kInf);
    std::fill(best_id.begin(), best_id.end(), std::numeric_limits<std::uint32_t>::max());
    for (const auto& cand : run.value) {
      const std::size_t base = cand.block * pbs;
      for (std::size_t s = 0; s < cand.dist.size(); ++s) {
        const double dist = cand.dist[s];
        if (dist < best[base + s] || (dist == best[base + s] && cand.id[s] < best_id[base + s])) {
          best[base + s] = dist;
          best_id[base + s] = cand.id[s];
        }
      }
    }

    model.assignments = best_id;
    model.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) model.inertia += best[i];
    model.schedule = std::move(run.report);
    if (o.record_history) model.history.push_back({model.assignments, model.inertia});

    const double shift = update_centroids(points, model.assignments, k, model.centroids);
    model.iterations = iter;
    if (shift <= o.tol) {
      model.converged = true;
      break;
    }
  }
  return model;
}

KMeansModel naive_kmeans(const PointSet& points, const KMeansOptions& o) {
  check_options(points, o);
  const std::size_t n = points.size(), d = points.dims(), k = o.k;

  KMeansModel model;
  model.k = k;
  model.dims = d;
  model.centroids = seed_centroids(points, o);
  model.assignments.assign(n, 0);

  for (int iter = 1; iter <= o.max_iters; ++iter) {
    model.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double bd = kInf;
      std::uint32_t bid = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double dist = squared_distance(points.row(i), model.centroid(c));
        if (dist < bd) {
          bd = dist;
          bid = static_cast<std::uint32_t>(c);
        }
      }
      model.assignments[i] = bid;
      model.inertia += bd;
    }
    if (o.record_history) model.history.push_back({model.assignments, model.inertia});

    std::vector<double> sums(k * d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) sums[model.assignments[i] * d + j] += points(i, j);
      ++counts[model.assignments[i]];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      double moved = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double mean = sums[c * d + j] / static_cast<double>(counts[c]);
        moved += (mean - model.centroids[c * d + j]) * (mean - model.centroids[c * d + j]);
        model.centroids[c * d + j] = mean;
      }
      shift = std::max(shift, std::sqrt(moved));
    }
    model.iterations = iter;
    if (shift <= o.tol) {
      model.converged = true;
      break;
    }
  }
  return model;
}

}  // namespace sfcloops
