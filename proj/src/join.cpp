// SPDX-License-Identifier: Apache-2.0

#include "sfcloops/join.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace sfcloops {

namespace {

// Join predicate: sqrt(d2) <= eps. The squared bound is a cheap prefilter
// that admits every d2 whose rounded root can still be <= eps.
struct Threshold {
  double eps;
  double bound;

  explicit Threshold(double e) : eps(e), bound(e * e * (1.0 + 1e-12)) {}
  bool accepts(double d2) const { return d2 <= bound && std::sqrt(d2) <= eps; }
};

void check_eps(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw ContractError("eps must be a positive finite number, got " + std::to_string(eps));
  }
}

// Sorted points laid out per block as [dimension][slot] so that the innermost
// distance loop runs over contiguous memory.
struct BlockLayout {
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t block = 0;
  std::size_t blocks = 0;
  std::vector<std::uint32_t> ids;   // sorted position -> point id
  std::vector<double> data;         // [block][dim][slot]
  std::vector<double> cells;        // [sorted position][dim]
  std::vector<double> cell_min;     // [block][dim]
  std::vector<double> cell_max;     // [block][dim]

  std::size_t count(std::size_t b) const { return std::min(block, n - b * block); }
  const double* column(std::size_t b, std::size_t dim) const { return data.data() + (b * d + dim) * block; }

  bool joinable(std::size_t a, std::size_t b) const {
    const double* amin = &cell_min[a * d];
    const double* amax = &cell_max[a * d];
    const double* bmin = &cell_min[b * d];
    const double* bmax = &cell_max[b * d];
    for (std::size_t j = 0; j < d; ++j) {
      if (bmin[j] - amax[j] > 1.0 || amin[j] - bmax[j] > 1.0) return false;
    }
    return true;
  }

  // Point-level version of joinable(): sorted position `pos` against block `b`.
  bool point_joinable(std::size_t pos, std::size_t b) const {
    const double* c = &cells[pos * d];
    const double* bmin = &cell_min[b * d];
    const double* bmax = &cell_max[b * d];
    for (std::size_t j = 0; j < d; ++j) {
      if (bmin[j] - c[j] > 1.0 || c[j] - bmax[j] > 1.0) return false;
    }
    return true;
  }
};

BlockLayout build_layout(const PointSet& points, double eps, const EgoOrder& ego, int block_bits) {
  BlockLayout L;
  L.d = points.dims();
  L.n = points.size();
  L.block = std::size_t{1} << block_bits;
  L.blocks = (L.n + L.block - 1) / L.block;
  L.ids = ego.order;
  L.data.assign(L.blocks * L.d * L.block, 0.0);
  L.cells.resize(L.n * L.d);
  L.cell_min.assign(L.blocks * L.d, 0.0);
  L.cell_max.assign(L.blocks * L.d, 0.0);

  for (std::size_t pos = 0; pos < L.n; ++pos) {
    const auto row = points.row(L.ids[pos]);
    const std::size_t b = pos / L.block, slot = pos % L.block;
    for (std::size_t j = 0; j < L.d; ++j) {
      L.data[(b * L.d + j) * L.block + slot] = row[j];
      const double c = std::floor(row[j] / eps);
      L.cells[pos * L.d + j] = c;
      double& lo = L.cell_min[b * L.d + j];
      double& hi = L.cell_max[b * L.d + j];
      if (slot == 0) {
        lo = hi = c;
      } else {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
    }
  }
  return L;
}

struct JoinAcc {
  std::vector<JoinPair> pairs;
  std::size_t block_pairs = 0;
  std::size_t pruned_pairs = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pruned;
  std::vector<double> scratch;
};

void emit(const BlockLayout& L, std::size_t pa, std::size_t pb, double d2, std::vector<JoinPair>& out) {
  std::uint32_t i = L.ids[pa], j = L.ids[pb];
  if (i > j) std::swap(i, j);
  out.push_back({i, j, std::sqrt(d2)});
}

// All pairs between block a and block b (a < b), or within block a (a == b).
void block_kernel(const BlockLayout& L, std::size_t a, std::size_t b, const Threshold& thr, JoinAcc& acc) {
  const std::size_t na = L.count(a), nb = L.count(b);
  acc.scratch.resize(L.block);
  double* d2 = acc.scratch.data();
  for (std::size_t s = 0; s < na; ++s) {
    const std::size_t pa = a * L.block + s;
    const std::size_t first = (a == b) ? s + 1 : 0;
    if (first >= nb || !L.point_joinable(pa, b)) continue;
    std::fill(d2 + first, d2 + nb, 0.0);
    for (std::size_t j = 0; j < L.d; ++j) {
      const double x = L.column(a, j)[s];
      const double* col = L.column(b, j);
      for (std::size_t t = first; t < nb; ++t) {
        const double diff = x - col[t];
        d2[t] += diff * diff;
      }
    }
    for (std::size_t t = first; t < nb; ++t) {
      if (thr.accepts(d2[t])) emit(L, pa, b * L.block + t, d2[t], acc.pairs);
    }
  }
}

bool pair_less(const JoinPair& x, const JoinPair& y) { return x.i != y.i ? x.i < y.i : x.j < y.j; }

}  // namespace

std::vector<double> ego_cells(const PointSet& points, double eps, std::span<const int> dim_order) {
  check_eps(eps);
  const std::size_t d = dim_order.size();
  std::vector<double> cells(points.size() * d);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) cells[i * d + j] = std::floor(points(i, dim_order[j]) / eps);
  }
  return cells;
}

bool ego_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::vector<int> variance_dim_order(const PointSet& points) {
  const std::size_t n = points.size(), d = points.dims();
  std::vector<double> variance(d, 0.0);
  if (n > 0) {
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += points(i, j);
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) variance[j] += (points(i, j) - mean) * (points(i, j) - mean);
    }
  }
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return variance[x] > variance[y]; });
  return order;
}

EgoOrder ego_order(const PointSet& points, double eps, bool reorder_dims) {
  check_eps(eps);
  EgoOrder ego;
  ego.eps = eps;
  if (reorder_dims) {
    ego.dim_order = variance_dim_order(points);
  } else {
    ego.dim_order.resize(points.dims());
    std::iota(ego.dim_order.begin(), ego.dim_order.end(), 0);
  }
  const std::vector<double> cells = ego_cells(points, eps, ego.dim_order);
  const std::size_t d = points.dims();
  ego.order.resize(points.size());
  std::iota(ego.order.begin(), ego.order.end(), 0u);
  std::stable_sort(ego.order.begin(), ego.order.end(), [&](std::uint32_t x, std::uint32_t y) {
    return ego_less({cells.data() + x * d, d}, {cells.data() + y * d, d});
  });
  return ego;
}

JoinResult epsilon_join(const PointSet& points, double eps, const JoinOptions& options) {
  check_eps(eps);
  if (options.workers < 1) throw ContractError("workers must be at least 1");
  if (options.block_bits < 0 || options.block_bits > 20) throw ContractError("block bits must lie in [0, 20]");

  JoinResult result;
  if (points.size() < 2) return result;

  const EgoOrder ego = ego_order(points, eps, options.reorder_dims);
  const BlockLayout layout = build_layout(points, eps, ego, options.block_bits);
  const Threshold thr(eps);
  const auto nb = static_cast<Coord>(layout.blocks);

  // Block pairs (a, b) with a <= b are the tuples (a, b + 1) of a strict
  // upper triangle over nb x (nb + 1).
  const LoopDomain domain = LoopDomain::make({nb, nb + 1}, TriangularShape{});
  const CurveSpec spec = embed(domain, options.curve);

  auto visit = [&](const GridPoint& p, JoinAcc& acc) {
    const std::size_t a = p[0], b = p[1] - 1;
    if (!layout.joinable(a, b)) {
      ++acc.pruned_pairs;
      if (options.record_pruned) acc.pruned.emplace_back(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
      return;
    }
    ++acc.block_pairs;
    block_kernel(layout, a, b, thr, acc);
  };
  auto merge = [](JoinAcc& into, JoinAcc&& from) {
    into.pairs.insert(into.pairs.end(), from.pairs.begin(), from.pairs.end());
    into.block_pairs += from.block_pairs;
    into.pruned_pairs += from.pruned_pairs;
    into.pruned.insert(into.pruned.end(), from.pruned.begin(), from.pruned.end());
  };

  const ExecOptions exec{options.workers, options.granule_bits, true};
  auto run = parallel_execute(domain, spec, exec, [] { return JoinAcc{}; }, visit, merge);

  result.pairs = std::move(run.value.pairs);
  std::sort(result.pairs.begin(), result.pairs.end(), pair_less);
  result.stats.blocks = layout.blocks;
  result.stats.block_pairs = run.value.block_pairs;
  result.stats.pruned_pairs = run.value.pruned_pairs;
  result.stats.pruned = std::move(run.value.pruned);
  result.schedule = std::move(run.report);
  return result;
}

JoinResult naive_join(const PointSet& points, double eps) {
  check_eps(eps);
  const Threshold thr(eps);
  JoinResult result;
  const std::size_t n = points.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = points.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d2 = squared_distance(a, points.row(j));
      if (thr.accepts(d2)) {
        result.pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), std::sqrt(d2)});
      }
    }
  }
  return result;
}

}  // namespace sfcloops
