// SPDX-License-Identifier: Apache-2.0
//
// Fully-associative LRU cache simulator and the access patterns of the
// kernels, used to count misses of a traversal order.
//
// Addresses are element indices into the logical arrays of a kernel (row-major
// point storage, row-major matrices), not machine addresses. The cache starts
// empty.

#pragma once

#include "sfcloops/curve.hpp"
#include "sfcloops/loop_engine.hpp"

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace sfcloops {

struct CacheConfig {
  std::uint64_t capacity_lines = 64;
  std::uint64_t line_size_elems = 64;  // power of two
};

struct MissStats {
  std::uint64_t accesses = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;

  double miss_ratio() const { return accesses ? static_cast<double>(misses) / static_cast<double>(accesses) : 0.0; }
  friend bool operator==(const MissStats&, const MissStats&) = default;
};

enum class AccessResult { Hit, Miss };

class LruCache {
 public:
  explicit LruCache(const CacheConfig& config);

  AccessResult access(std::uint64_t address);

  const CacheConfig& config() const { return config_; }
  const MissStats& stats() const { return stats_; }

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  struct Node {
    std::uint64_t line = 0;
    std::uint32_t prev = kNone;
    std::uint32_t next = kNone;
  };

  void unlink(std::uint32_t n);
  void push_front(std::uint32_t n);

  CacheConfig config_;
  int line_shift_ = 0;
  MissStats stats_;
  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, std::uint32_t> where_;
  std::uint32_t head_ = kNone;  // most recently used
  std::uint32_t tail_ = kNone;  // least recently used
};

/// Point pairs (i, j), i < j, of a self-join; each tuple reads rows i and j.
struct SelfJoinPattern {
  std::size_t n = 4096;
  std::size_t d = 8;
};

/// Block tuples of C = A * B with square n x n matrices split into
/// `blocks` x `blocks` blocks. With dims = 3 a tuple (I, J, K) reads A[I,K],
/// B[K,J] and C[I,J]; with dims = 2 a tuple (I, J) does so for every K in
/// ascending order. A, B and C are stored back to back.
struct MatmulPattern {
  std::size_t blocks = 8;
  std::size_t block = 32;
  int dims = 3;
};

/// Assignment step of k-means: tuple (point block, centroid block) reads the
/// points of the block and the centroids of the block. Centroids follow the
/// points in memory.
struct KMeansPattern {
  std::size_t n = 4096;
  std::size_t d = 8;
  std::size_t k = 64;
  std::size_t point_block = 64;
  std::size_t centroid_block = 8;
};

using AccessPattern = std::variant<SelfJoinPattern, MatmulPattern, KMeansPattern>;

std::string pattern_name(const AccessPattern& pattern);
LoopDomain pattern_domain(const AccessPattern& pattern);

namespace detail {

template <class Sink>
void emit_rows(std::size_t first, std::size_t last, std::size_t d, std::uint64_t base, Sink& sink) {
  for (std::size_t r = first; r < last; ++r) {
    for (std::size_t j = 0; j < d; ++j) sink(base + r * d + j);
  }
}

template <class Sink>
void emit_block(std::size_t n, std::size_t block, std::size_t bi, std::size_t bj, std::uint64_t base, Sink& sink) {
  for (std::size_t i = bi * block; i < (bi + 1) * block; ++i) {
    for (std::size_t j = bj * block; j < (bj + 1) * block; ++j) sink(base + i * n + j);
  }
}

}  // namespace detail

/// Calls sink(address) for every element the tuple touches, in access order.
template <class Sink>
void emit_addresses(const AccessPattern& pattern, const GridPoint& t, Sink&& sink) {
  if (const auto* p = std::get_if<SelfJoinPattern>(&pattern)) {
    detail::emit_rows(t[0], t[0] + 1, p->d, 0, sink);
    detail::emit_rows(t[1], t[1] + 1, p->d, 0, sink);
  } else if (const auto* p = std::get_if<MatmulPattern>(&pattern)) {
    const std::size_t n = p->blocks * p->block;
    const std::uint64_t a = 0, b = n * n, c = 2 * n * n;
    auto one = [&](std::size_t k) {
      detail::emit_block(n, p->block, t[0], k, a, sink);
      detail::emit_block(n, p->block, k, t[1], b, sink);
      detail::emit_block(n, p->block, t[0], t[1], c, sink);
    };
    if (p->dims == 3) {
      one(t[2]);
    } else {
      for (std::size_t k = 0; k < p->blocks; ++k) one(k);
    }
  } else if (const auto* p = std::get_if<KMeansPattern>(&pattern)) {
    const std::size_t p0 = t[0] * p->point_block, p1 = std::min(p->n, p0 + p->point_block);
    const std::size_t c0 = t[1] * p->centroid_block, c1 = std::min(p->k, c0 + p->centroid_block);
    detail::emit_rows(p0, p1, p->d, 0, sink);
    detail::emit_rows(c0, c1, p->d, p->n * p->d, sink);
  }
}

/// Replays the traversal of the pattern's domain in `spec` order through an
/// empty cache.
MissStats simulate(const AccessPattern& pattern, const CurveSpec& spec, const CacheConfig& config);

/// A traversal order for reports: a curve family, or row-major (lexicographic).
struct TraversalOrder {
  std::string name;
  CurveFamily family = CurveFamily::Hilbert;
  bool row_major = false;
};

/// "hilbert", "zorder", "peano" or "rowmajor".
TraversalOrder parse_order(std::string_view name);
CurveSpec order_spec(const TraversalOrder& order, const LoopDomain& domain);

struct CacheReportRow {
  std::string curve;
  std::string pattern;
  std::uint64_t capacity = 0;
  std::uint64_t line = 0;
  std::uint64_t accesses = 0;
  std::uint64_t misses = 0;
};

std::vector<CacheReportRow> compare_orders(const std::vector<AccessPattern>& patterns,
                                           const std::vector<CacheConfig>& configs,
                                           const std::vector<TraversalOrder>& orders);

/// Header "curve,pattern,capacity,line,accesses,misses" then one row each.
void write_cache_report_csv(std::ostream& out, const std::vector<CacheReportRow>& rows);

}  // namespace sfcloops
