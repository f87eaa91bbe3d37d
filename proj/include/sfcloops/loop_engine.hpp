// SPDX-License-Identifier: Apache-2.0
//
// Loop domains traversed in curve order, balanced work packets, and a
// work-stealing worker pool.
//
// The unit of scheduling is a granule: 2^B consecutive curve indices. A
// traversal is split into one packet per worker at granule boundaries so that
// every packet holds about the same number of in-domain tuples. Idle workers
// steal the upper half of the largest unprocessed remainder.
//
// Accumulators are kept per granule and folded in ascending curve order after
// the pool drains, so for a fixed granule size the merged result does not
// depend on the number of workers or on how the work was stolen.

#pragma once

#include "sfcloops/curve.hpp"

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace sfcloops {

struct FullShape {
  friend bool operator==(FullShape, FullShape) = default;
};
/// Strict upper triangle over the first two coordinates: i < j.
struct TriangularShape {
  friend bool operator==(TriangularShape, TriangularShape) = default;
};
/// |i - j| <= width over the first two coordinates.
struct BandShape {
  Coord width = 0;
  friend bool operator==(BandShape, BandShape) = default;
};

using Shape = std::variant<FullShape, TriangularShape, BandShape>;

std::string to_string(const Shape& shape);
/// Parses "full", "tri" or "band:<b>".
Shape parse_shape(std::string_view text);

class LoopDomain {
 public:
  static LoopDomain make(std::vector<Coord> bounds, Shape shape = FullShape{});

  int dims() const { return static_cast<int>(bounds_.size()); }
  const std::vector<Coord>& bounds() const { return bounds_; }
  const Shape& shape() const { return shape_; }
  Coord max_bound() const;

  /// Number of in-domain tuples.
  Index size() const { return size_; }

  bool contains(const GridPoint& p) const {
    for (int j = 0; j < dims(); ++j) {
      if (p[j] >= bounds_[j]) return false;
    }
    return std::visit(
        [&](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, TriangularShape>) {
            return p[0] < p[1];
          } else if constexpr (std::is_same_v<S, BandShape>) {
            const Coord diff = p[0] > p[1] ? p[0] - p[1] : p[1] - p[0];
            return diff <= s.width;
          } else {
            return true;
          }
        },
        shape_);
  }

 private:
  LoopDomain() = default;

  std::vector<Coord> bounds_;
  Shape shape_;
  Index size_ = 0;
};

/// Smallest-order spec of `family` whose grid covers every bound of `domain`.
CurveSpec embed(const LoopDomain& domain, CurveFamily family, std::span<const int> monotone_dims = {});

inline constexpr int kDefaultGranuleBits = 10;

struct WorkPacket {
  Index lo = 0;  // first curve index
  Index hi = 0;  // one past the last curve index
  Index valid_count = 0;

  friend bool operator==(const WorkPacket&, const WorkPacket&) = default;
};

/// In-domain tuples whose curve index lies in [lo, hi).
Index count_valid(const LoopDomain& domain, const CurveSpec& spec, Index lo, Index hi);

/// Per-granule in-domain tuple counts over the whole curve.
std::vector<Index> granule_counts(const LoopDomain& domain, const CurveSpec& spec, int granule_bits);

/// Packets cut at granule boundaries by prefix sums. The packet count is
/// reduced to the domain size when larger. The granule is refined until every
/// packet holds at least one tuple and max/min packet size is at most
/// 1 + 2^B * packets / size, or B reaches 0.
struct PartitionPlan {
  int granule_bits = 0;
  Index granules = 0;
  std::vector<WorkPacket> packets;
  std::vector<Index> granule_valid;  // in-domain tuples per granule
};

PartitionPlan plan_partition(const LoopDomain& domain, const CurveSpec& spec, std::size_t packets,
                             int granule_bits = kDefaultGranuleBits);

std::vector<WorkPacket> partition(const LoopDomain& domain, const CurveSpec& spec, std::size_t packets,
                                  int granule_bits = kDefaultGranuleBits);

struct ExecOptions {
  int workers = 1;
  int granule_bits = kDefaultGranuleBits;
  bool stealing = true;
};

struct WorkerStats {
  std::size_t packets = 0;  // contiguous runs of curve indices processed
  std::size_t steals = 0;
  Index tuples = 0;         // in-domain tuples visited
  double busy = 0.0;        // seconds, or virtual time in cost-model mode
  std::vector<std::pair<Index, Index>> runs;  // processed [lo, hi) curve ranges, in order
};

struct ScheduleReport {
  std::vector<WorkerStats> workers;
  std::size_t steals = 0;
  double makespan = 0.0;
  double total_work = 0.0;  // sum of busy time over workers
  int granule_bits = 0;

  /// Makespan of a perfectly balanced schedule.
  double ideal() const { return workers.empty() ? 0.0 : total_work / static_cast<double>(workers.size()); }
};

/// Passed to visitors that accept a third argument.
struct VisitContext {
  int worker = 0;
  Index index = 0;
};

/// A visitor threw. Carries the failing tuple with the lowest curve index
/// among those observed before the pool stopped.
class VisitError : public std::runtime_error {
 public:
  VisitError(GridPoint tuple, Index index, const std::string& cause);

  const GridPoint& tuple() const { return tuple_; }
  Index index() const { return index_; }

 private:
  GridPoint tuple_;
  Index index_;
};

namespace detail {

void check_compatible(const LoopDomain& domain, const CurveSpec& spec);

template <class Visit, class Acc>
void invoke_visit(Visit& visit, const GridPoint& p, Acc& acc, const VisitContext& ctx) {
  if constexpr (std::is_invocable_v<Visit&, const GridPoint&, Acc&, const VisitContext&>) {
    visit(p, acc, ctx);
  } else {
    visit(p, acc);
  }
}

/// Runs granules of `plan` on a thread pool. `work(worker, granule)` returns
/// the number of tuples it visited.
ScheduleReport run_pool(const PartitionPlan& plan, const ExecOptions& options,
                        const std::function<Index(int, Index)>& work);

}  // namespace detail

/// Visits every in-domain tuple once, in curve order, on the calling thread.
/// `visit(point, acc)` or `visit(point, acc, VisitContext)`.
template <class Acc, class Visit>
Acc traverse(const LoopDomain& domain, const CurveSpec& spec, Acc acc, Visit&& visit) {
  detail::check_compatible(domain, spec);
  CurveStepper stepper(spec, 0);
  do {
    const GridPoint& p = stepper.point();
    if (domain.contains(p)) {
      try {
        detail::invoke_visit(visit, p, acc, VisitContext{0, stepper.index()});
      } catch (const std::exception& e) {
        throw VisitError(p, stepper.index(), e.what());
      }
    }
  } while (stepper.advance());
  return acc;
}

template <class Acc>
struct ExecResult {
  Acc value;
  ScheduleReport report;
};

/// Parallel traversal. `init()` creates an empty accumulator, `visit` is as
/// for traverse, and `merge(Acc& into, Acc&& from)` must be associative.
template <class Init, class Visit, class Merge>
auto parallel_execute(const LoopDomain& domain, const CurveSpec& spec, const ExecOptions& options,
                      Init&& init, Visit&& visit, Merge&& merge) {
  using Acc = std::decay_t<std::invoke_result_t<Init&>>;
  detail::check_compatible(domain, spec);
  if (options.workers < 1) throw ContractError("workers must be at least 1");

  const PartitionPlan plan =
      plan_partition(domain, spec, static_cast<std::size_t>(options.workers), options.granule_bits);
  std::vector<std::optional<Acc>> slots(static_cast<std::size_t>(plan.granules));

  auto work = [&](int worker, Index granule) -> Index {
    if (plan.granule_valid[granule] == 0) return 0;
    const Index lo = granule << plan.granule_bits;
    const Index hi = std::min(spec.cells(), (granule + 1) << plan.granule_bits);
    Acc acc = init();
    Index visited = 0;
    CurveStepper stepper(spec, lo);
    for (Index i = lo;;) {
      const GridPoint& p = stepper.point();
      if (domain.contains(p)) {
        try {
          detail::invoke_visit(visit, p, acc, VisitContext{worker, i});
        } catch (const std::exception& e) {
          throw VisitError(p, i, e.what());
        }
        ++visited;
      }
      if (++i == hi) break;
      stepper.advance();
    }
    slots[granule].emplace(std::move(acc));
    return visited;
  };

  ScheduleReport report = detail::run_pool(plan, options, work);

  Acc merged = init();
  for (auto& slot : slots) {
    if (slot) merge(merged, std::move(*slot));
  }
  return ExecResult<Acc>{std::move(merged), std::move(report)};
}

/// Per-tuple cost in virtual time units.
using CostFunction = std::function<double(const GridPoint&, Index)>;

/// Replays the scheduler deterministically in virtual time: the same packets,
/// the same steal policy, no threads and no wall clocks. Steals are free.
ScheduleReport simulate_schedule(const LoopDomain& domain, const CurveSpec& spec, const ExecOptions& options,
                                 const CostFunction& cost);

}  // namespace sfcloops
