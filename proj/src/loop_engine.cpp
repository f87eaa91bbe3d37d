// SPDX-License-Identifier: Apache-2.0

#include "sfcloops/loop_engine.hpp"

#include <atomic>
#include <charconv>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

namespace sfcloops {

namespace {

constexpr int kMaxGranuleBits = 62;

// The upper half of [next, end) in granules, at least one granule.
std::optional<std::pair<Index, Index>> steal_split(Index next, Index end) {
  const Index remaining = end - next;
  if (remaining == 0) return std::nullopt;
  const Index take = remaining >= 2 ? remaining / 2 : 1;
  return std::make_pair(end - take, end);
}

struct RunRecorder {
  std::vector<std::pair<Index, Index>> granule_runs;

  void add(Index granule) {
    if (!granule_runs.empty() && granule_runs.back().second == granule) {
      ++granule_runs.back().second;
    } else {
      granule_runs.emplace_back(granule, granule + 1);
    }
  }
};

void finish_runs(WorkerStats& stats, const RunRecorder& rec, int granule_bits, Index cells) {
  stats.packets = rec.granule_runs.size();
  for (const auto& [lo, hi] : rec.granule_runs) {
    stats.runs.emplace_back(lo << granule_bits, std::min(cells, hi << granule_bits));
  }
}

Index cells_of(const PartitionPlan& plan) {
  return plan.packets.empty() ? 0 : plan.packets.back().hi;
}

// Cut positions (in granules) for `count` packets. Every interior cut is
// drawn from the boundaries whose prefix count lies within `window` of its
// target t * total / count (one boundary per distinct prefix value, at most
// kSide on each side); among those choices the one with the smallest max/min
// packet ratio wins. Empty result when no choice gives strictly increasing
// cuts and nonempty packets.
std::vector<Index> choose_cuts(const std::vector<Index>& prefix, Index count, Index total, Index window) {
  constexpr std::size_t kSide = 8;
  const Index granules = prefix.size() - 1;
  std::vector<std::vector<Index>> cand(count + 1);
  cand[0] = {0};
  cand[count] = {granules};
  for (Index t = 1; t < count; ++t) {
    const auto target = static_cast<Index>(static_cast<unsigned __int128>(t) * total / count);
    const auto up = static_cast<std::size_t>(std::lower_bound(prefix.begin(), prefix.end(), target) - prefix.begin());
    auto& c = cand[t];
    // below: last boundary of each distinct prefix value < target
    for (std::size_t b = up; b > 0 && c.size() < kSide;) {
      --b;
      if (target - prefix[b] > window) break;
      if (b + 1 < prefix.size() && prefix[b + 1] == prefix[b] && b + 1 < up) continue;
      c.push_back(b);
    }
    std::reverse(c.begin(), c.end());
    std::size_t above = 0;
    for (std::size_t b = up; b < prefix.size() && above < kSide; ++b) {
      if (prefix[b] - target > window && above > 0) break;
      if (b > up && prefix[b] == prefix[b - 1]) continue;
      c.push_back(b);
      ++above;
    }
  }

  auto size = [&](Index t, std::size_t a, std::size_t b) -> std::optional<Index> {
    const Index lo = cand[t][a], hi = cand[t + 1][b];
    if (lo >= hi) return std::nullopt;
    const Index valid = prefix[hi] - prefix[lo];
    if (total > 0 && valid == 0) return std::nullopt;
    return valid;
  };

  std::vector<Index> floors;
  for (Index t = 0; t < count; ++t) {
    for (std::size_t a = 0; a < cand[t].size(); ++a) {
      for (std::size_t b = 0; b < cand[t + 1].size(); ++b) {
        if (auto v = size(t, a, b)) floors.push_back(*v);
      }
    }
  }
  std::sort(floors.begin(), floors.end());
  floors.erase(std::unique(floors.begin(), floors.end()), floors.end());

  constexpr Index kInf = std::numeric_limits<Index>::max();
  std::vector<Index> best_cut;
  Index best_max = kInf, best_min = 1;
  std::vector<std::vector<Index>> most(count + 1);
  std::vector<std::vector<std::size_t>> from(count + 1);
  for (Index t = 0; t <= count; ++t) from[t].resize(cand[t].size());
  // The largest packet is at least the mean, so once mean / floor cannot beat
  // the best ratio no smaller floor can either.
  const Index mean = (total + count - 1) / count;
  for (auto it = floors.rbegin(); it != floors.rend(); ++it) {
    const Index floor = *it;
    if (floor > mean) continue;
    if (!best_cut.empty() &&
        static_cast<unsigned __int128>(mean) * best_min >= static_cast<unsigned __int128>(best_max) * std::max<Index>(floor, 1)) {
      break;
    }
    // most[t][c]: smallest possible largest packet with cut t at candidate c
    most[0].assign(1, 0);
    for (Index t = 0; t < count; ++t) {
      most[t + 1].assign(cand[t + 1].size(), kInf);
      for (std::size_t b = 0; b < cand[t + 1].size(); ++b) {
        for (std::size_t a = 0; a < cand[t].size(); ++a) {
          if (most[t][a] == kInf) continue;
          const auto v = size(t, a, b);
          if (!v || *v < floor) continue;
          const Index m = std::max(most[t][a], *v);
          if (m < most[t + 1][b]) {
            most[t + 1][b] = m;
            from[t + 1][b] = a;
          }
        }
      }
    }
    const Index m = most[count][0];
    if (m == kInf) continue;
    const Index lo = std::max<Index>(floor, 1);
    const bool better = best_cut.empty() ||
                        static_cast<unsigned __int128>(m) * best_min < static_cast<unsigned __int128>(best_max) * lo;
    if (!better) continue;
    best_max = m;
    best_min = lo;
    best_cut.assign(count + 1, 0);
    std::size_t c = 0;
    for (Index t = count; t > 0; --t) {
      best_cut[t] = cand[t][c];
      c = from[t][c];
    }
  }
  return best_cut;
}

}  // namespace

std::string to_string(const Shape& shape) {
  return std::visit(
      [](const auto& s) -> std::string {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, TriangularShape>) {
          return "tri";
        } else if constexpr (std::is_same_v<S, BandShape>) {
          return "band:" + std::to_string(s.width);
        } else {
          return "full";
        }
      },
      shape);
}

Shape parse_shape(std::string_view text) {
  if (text == "full") return FullShape{};
  if (text == "tri") return TriangularShape{};
  if (text.starts_with("band:")) {
    const auto digits = text.substr(5);
    Coord width = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), width);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) {
      return BandShape{width};
    }
  }
  throw ContractError("unknown shape '" + std::string(text) + "' (expected full, tri or band:<b>)");
}

LoopDomain LoopDomain::make(std::vector<Coord> bounds, Shape shape) {
  if (bounds.empty() || bounds.size() > static_cast<std::size_t>(kMaxDims)) {
    throw ContractError("loop domains have 1 to 6 dimensions");
  }
  for (Coord b : bounds) {
    if (b < 1) throw ContractError("loop bounds must be at least 1");
  }
  if (!std::holds_alternative<FullShape>(shape) && bounds.size() != 2) {
    throw ContractError("triangular and band shapes are two-dimensional");
  }

  LoopDomain d;
  d.bounds_ = std::move(bounds);
  d.shape_ = shape;

  const Index rows = d.bounds_[0];
  if (std::holds_alternative<TriangularShape>(shape)) {
    for (Index j = 0; j < d.bounds_[1]; ++j) d.size_ += std::min(j, rows);
  } else if (const auto* band = std::get_if<BandShape>(&shape)) {
    const Index cols = d.bounds_[1];
    const Index w = band->width;
    for (Index i = 0; i < rows; ++i) {
      const Index first = i > w ? i - w : 0;
      const Index last = std::min(cols - 1, i + w);
      if (first <= last && first < cols) d.size_ += last - first + 1;
    }
  } else {
    d.size_ = 1;
    for (Coord b : d.bounds_) d.size_ *= b;
  }
  return d;
}

Coord LoopDomain::max_bound() const { return *std::max_element(bounds_.begin(), bounds_.end()); }

CurveSpec embed(const LoopDomain& domain, CurveFamily family, std::span<const int> monotone_dims) {
  const Index radix = family == CurveFamily::Peano ? 3 : 2;
  int order = 0;
  for (Index side = 1; side < domain.max_bound(); side *= radix) ++order;
  return CurveSpec::make(family, domain.dims(), order, monotone_dims);
}

VisitError::VisitError(GridPoint tuple, Index index, const std::string& cause)
    : std::runtime_error("visitor failed at " + to_string(tuple) + " (curve index " + std::to_string(index) +
                         "): " + cause),
      tuple_(tuple),
      index_(index) {}

namespace detail {

void check_compatible(const LoopDomain& domain, const CurveSpec& spec) {
  if (domain.dims() != spec.dims()) {
    throw ContractError("domain has " + std::to_string(domain.dims()) + " dimensions, curve has " +
                        std::to_string(spec.dims()));
  }
  if (spec.side() < domain.max_bound()) {
    throw ContractError("curve side " + std::to_string(spec.side()) + " does not cover bound " +
                        std::to_string(domain.max_bound()));
  }
}

}  // namespace detail

Index count_valid(const LoopDomain& domain, const CurveSpec& spec, Index lo, Index hi) {
  detail::check_compatible(domain, spec);
  if (lo > hi || hi > spec.cells()) {
    throw RangeError("interval [" + std::to_string(lo) + ", " + std::to_string(hi) + ") outside [0, " +
                     std::to_string(spec.cells()) + "]");
  }
  if (lo == hi) return 0;
  Index count = 0;
  CurveStepper stepper(spec, lo);
  for (Index i = lo;;) {
    if (domain.contains(stepper.point())) ++count;
    if (++i == hi) break;
    stepper.advance();
  }
  return count;
}

std::vector<Index> granule_counts(const LoopDomain& domain, const CurveSpec& spec, int granule_bits) {
  detail::check_compatible(domain, spec);
  granule_bits = std::clamp(granule_bits, 0, kMaxGranuleBits);
  const Index granules = ((spec.cells() - 1) >> granule_bits) + 1;
  std::vector<Index> counts(static_cast<std::size_t>(granules), 0);
  CurveStepper stepper(spec, 0);
  do {
    if (domain.contains(stepper.point())) ++counts[stepper.index() >> granule_bits];
  } while (stepper.advance());
  return counts;
}

PartitionPlan plan_partition(const LoopDomain& domain, const CurveSpec& spec, std::size_t packets,
                             int granule_bits) {
  detail::check_compatible(domain, spec);
  if (packets < 1) throw ContractError("at least one packet is required");

  const Index total = domain.size();
  const Index count = std::min<Index>(packets, std::max<Index>(total, 1));
  int bits = std::clamp(granule_bits, 0, kMaxGranuleBits);

  for (;;) {
    PartitionPlan plan;
    plan.granule_bits = bits;
    plan.granule_valid = granule_counts(domain, spec, bits);
    plan.granules = plan.granule_valid.size();

    std::vector<Index> prefix(plan.granule_valid.size() + 1, 0);
    for (std::size_t g = 0; g < plan.granule_valid.size(); ++g) prefix[g + 1] = prefix[g] + plan.granule_valid[g];

    const std::vector<Index> cut = choose_cuts(prefix, count, total, (Index{1} << std::min(bits, 60)) * 2);
    bool ok = !cut.empty();
    for (Index t = 0; ok && t < count; ++t) {
      const Index valid = prefix[cut[t + 1]] - prefix[cut[t]];
      plan.packets.push_back({cut[t] << bits, std::min(spec.cells(), cut[t + 1] << bits), valid});
    }
    if (!ok) plan.packets.clear();
    if (ok && total > 0) {
      // max / min <= 1 + 2^bits * count / total, else refine
      Index most = 0, least = total;
      for (const auto& p : plan.packets) {
        most = std::max(most, p.valid_count);
        least = std::min(least, p.valid_count);
      }
      const auto lhs = static_cast<unsigned __int128>(most) * total;
      const auto rhs = static_cast<unsigned __int128>(least) * (total + (static_cast<unsigned __int128>(1) << bits) * count);
      ok = lhs <= rhs;
    }
    if (ok || bits == 0) return plan;
    --bits;
  }
}

std::vector<WorkPacket> partition(const LoopDomain& domain, const CurveSpec& spec, std::size_t packets,
                                  int granule_bits) {
  return plan_partition(domain, spec, packets, granule_bits).packets;
}

namespace detail {

ScheduleReport run_pool(const PartitionPlan& plan, const ExecOptions& options,
                        const std::function<Index(int, Index)>& work) {
  struct Queue {
    std::mutex mutex;
    Index next = 0;
    Index end = 0;
  };

  const int workers = options.workers;
  const int bits = plan.granule_bits;
  auto queues = std::make_unique<Queue[]>(static_cast<std::size_t>(workers));
  for (std::size_t p = 0; p < plan.packets.size(); ++p) {
    queues[p].next = plan.packets[p].lo >> bits;
    queues[p].end = ((plan.packets[p].hi - 1) >> bits) + 1;
  }

  ScheduleReport report;
  report.granule_bits = bits;
  report.workers.resize(static_cast<std::size_t>(workers));
  std::vector<RunRecorder> recorders(static_cast<std::size_t>(workers));

  std::atomic<bool> abort{false};
  std::mutex error_mutex;
  std::optional<VisitError> first_error;
  std::exception_ptr other_error;

  auto pop = [&](int w) -> std::optional<Index> {
    std::lock_guard lock(queues[w].mutex);
    if (queues[w].next == queues[w].end) return std::nullopt;
    return queues[w].next++;
  };

  auto steal = [&](int thief) -> bool {
    for (;;) {
      int victim = -1;
      Index best = 0;
      for (int v = 0; v < workers; ++v) {
        if (v == thief) continue;
        std::lock_guard lock(queues[v].mutex);
        const Index remaining = queues[v].end - queues[v].next;
        if (remaining > best) {
          best = remaining;
          victim = v;
        }
      }
      if (victim < 0) return false;
      std::optional<std::pair<Index, Index>> range;
      {
        std::lock_guard lock(queues[victim].mutex);
        range = steal_split(queues[victim].next, queues[victim].end);
        if (range) queues[victim].end = range->first;
      }
      if (!range) continue;  // drained while we looked; rescan
      std::lock_guard lock(queues[thief].mutex);
      queues[thief].next = range->first;
      queues[thief].end = range->second;
      return true;
    }
  };

  auto run_worker = [&](int w) {
    WorkerStats& stats = report.workers[w];
    while (!abort.load(std::memory_order_relaxed)) {
      std::optional<Index> granule = pop(w);
      if (!granule) {
        if (!options.stealing || !steal(w)) break;
        ++stats.steals;
        continue;
      }
      const auto start = std::chrono::steady_clock::now();
      try {
        stats.tuples += work(w, *granule);
      } catch (const VisitError& e) {
        std::lock_guard lock(error_mutex);
        if (!first_error || e.index() < first_error->index()) first_error.emplace(e);
        abort = true;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!other_error) other_error = std::current_exception();
        abort = true;
      }
      stats.busy += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      recorders[w].add(*granule);
    }
  };

  const auto start = std::chrono::steady_clock::now();
  if (workers == 1) {
    run_worker(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run_worker, w);
  }
  report.makespan = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (first_error) throw *first_error;
  if (other_error) std::rethrow_exception(other_error);

  for (int w = 0; w < workers; ++w) {
    finish_runs(report.workers[w], recorders[w], bits, cells_of(plan));
    report.steals += report.workers[w].steals;
    report.total_work += report.workers[w].busy;
  }
  return report;
}

}  // namespace detail

ScheduleReport simulate_schedule(const LoopDomain& domain, const CurveSpec& spec, const ExecOptions& options,
                                 const CostFunction& cost) {
  if (options.workers < 1) throw ContractError("workers must be at least 1");
  const PartitionPlan plan =
      plan_partition(domain, spec, static_cast<std::size_t>(options.workers), options.granule_bits);
  const int bits = plan.granule_bits;

  std::vector<double> granule_cost(static_cast<std::size_t>(plan.granules), 0.0);
  CurveStepper stepper(spec, 0);
  do {
    if (domain.contains(stepper.point())) {
      granule_cost[stepper.index() >> bits] += cost(stepper.point(), stepper.index());
    }
  } while (stepper.advance());

  const auto workers = static_cast<std::size_t>(options.workers);
  std::vector<Index> next(workers, 0), end(workers, 0);
  for (std::size_t p = 0; p < plan.packets.size(); ++p) {
    next[p] = plan.packets[p].lo >> bits;
    end[p] = ((plan.packets[p].hi - 1) >> bits) + 1;
  }

  ScheduleReport report;
  report.granule_bits = bits;
  report.workers.resize(workers);
  std::vector<RunRecorder> recorders(workers);
  std::vector<double> clock(workers, 0.0);
  std::vector<bool> active(workers, true);

  for (;;) {
    // The active worker with the earliest clock acts next; ties go to the lowest id.
    std::size_t w = workers;
    for (std::size_t v = 0; v < workers; ++v) {
      if (active[v] && (w == workers || clock[v] < clock[w])) w = v;
    }
    if (w == workers) break;

    WorkerStats& stats = report.workers[w];
    if (next[w] < end[w]) {
      const Index g = next[w]++;
      clock[w] += granule_cost[g];
      stats.busy += granule_cost[g];
      stats.tuples += plan.granule_valid[g];
      recorders[w].add(g);
      continue;
    }

    std::size_t victim = workers;
    Index best = 0;
    if (options.stealing) {
      for (std::size_t v = 0; v < workers; ++v) {
        if (v != w && end[v] - next[v] > best) {
          best = end[v] - next[v];
          victim = v;
        }
      }
    }
    if (victim == workers) {
      active[w] = false;
      continue;
    }
    const auto range = steal_split(next[victim], end[victim]);
    end[victim] = range->first;
    next[w] = range->first;
    end[w] = range->second;
    ++stats.steals;
  }

  const Index cells = spec.cells();
  for (std::size_t w = 0; w < workers; ++w) {
    finish_runs(report.workers[w], recorders[w], bits, cells);
    report.steals += report.workers[w].steals;
    report.total_work += report.workers[w].busy;
    report.makespan = std::max(report.makespan, clock[w]);
  }
  return report;
}

}  // namespace sfcloops
