// SPDX-License-Identifier: Apache-2.0

#include "sfcloops/cache_model.hpp"

#include <bit>
#include <ostream>

namespace sfcloops {

LruCache::LruCache(const CacheConfig& config) : config_(config) {
  if (config.capacity_lines < 1) throw ContractError("cache capacity must be at least one line");
  if (config.capacity_lines >= kNone) throw ContractError("cache capacity too large");
  if (config.line_size_elems < 1 || !std::has_single_bit(config.line_size_elems)) {
    throw ContractError("line size must be a power of two");
  }
  line_shift_ = std::countr_zero(config.line_size_elems);
  nodes_.reserve(static_cast<std::size_t>(config.capacity_lines));
  where_.reserve(static_cast<std::size_t>(config.capacity_lines) * 2);
}

void LruCache::unlink(std::uint32_t n) {
  Node& node = nodes_[n];
  if (node.prev != kNone) nodes_[node.prev].next = node.next; else head_ = node.next;
  if (node.next != kNone) nodes_[node.next].prev = node.prev; else tail_ = node.prev;
  node.prev = node.next = kNone;
}

void LruCache::push_front(std::uint32_t n) {
  nodes_[n].prev = kNone;
  nodes_[n].next = head_;
  if (head_ != kNone) nodes_[head_].prev = n;
  head_ = n;
  if (tail_ == kNone) tail_ = n;
}

AccessResult LruCache::access(std::uint64_t address) {
  ++stats_.accesses;
  const std::uint64_t line = address >> line_shift_;
  if (head_ != kNone && nodes_[head_].line == line) return AccessResult::Hit;

  if (auto it = where_.find(line); it != where_.end()) {
    unlink(it->second);
    push_front(it->second);
    return AccessResult::Hit;
  }

  ++stats_.misses;
  std::uint32_t slot;
  if (nodes_.size() < config_.capacity_lines) {
    slot = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});
  } else {
    slot = tail_;
    unlink(slot);
    where_.erase(nodes_[slot].line);
    ++stats_.evictions;
  }
  nodes_[slot].line = line;
  where_.emplace(line, slot);
  push_front(slot);
  return AccessResult::Miss;
}

std::string pattern_name(const AccessPattern& pattern) {
  if (std::holds_alternative<SelfJoinPattern>(pattern)) return "selfjoin";
  if (const auto* p = std::get_if<MatmulPattern>(&pattern)) return p->dims == 3 ? "matmul3" : "matmul2";
  return "kmeans";
}

LoopDomain pattern_domain(const AccessPattern& pattern) {
  if (const auto* p = std::get_if<SelfJoinPattern>(&pattern)) {
    return LoopDomain::make({static_cast<Coord>(p->n), static_cast<Coord>(p->n)}, TriangularShape{});
  }
  if (const auto* p = std::get_if<MatmulPattern>(&pattern)) {
    if (p->dims != 2 && p->dims != 3) throw ContractError("matmul pattern dims must be 2 or 3");
    std::vector<Coord> bounds(static_cast<std::size_t>(p->dims), static_cast<Coord>(p->blocks));
    return LoopDomain::make(std::move(bounds));
  }
  const auto& p = std::get<KMeansPattern>(pattern);
  return LoopDomain::make({static_cast<Coord>((p.n + p.point_block - 1) / p.point_block),
                           static_cast<Coord>((p.k + p.centroid_block - 1) / p.centroid_block)});
}

MissStats simulate(const AccessPattern& pattern, const CurveSpec& spec, const CacheConfig& config) {
  const LoopDomain domain = pattern_domain(pattern);
  LruCache cache(config);
  auto sink = [&](std::uint64_t address) { cache.access(address); };
  traverse(domain, spec, 0, [&](const GridPoint& t, int&) { emit_addresses(pattern, t, sink); });
  return cache.stats();
}

TraversalOrder parse_order(std::string_view name) {
  if (name == "rowmajor") return {"rowmajor", CurveFamily::ZOrder, true};
  return {std::string(name), parse_curve_family(name), false};
}

CurveSpec order_spec(const TraversalOrder& order, const LoopDomain& domain) {
  if (!order.row_major) return embed(domain, order.family);
  std::vector<int> all(static_cast<std::size_t>(domain.dims()));
  for (int j = 0; j < domain.dims(); ++j) all[j] = j;
  return embed(domain, order.family, all);
}

std::vector<CacheReportRow> compare_orders(const std::vector<AccessPattern>& patterns,
                                           const std::vector<CacheConfig>& configs,
                                           const std::vector<TraversalOrder>& orders) {
  std::vector<CacheReportRow> rows;
  for (const auto& pattern : patterns) {
    const LoopDomain domain = pattern_domain(pattern);
    for (const auto& order : orders) {
      const CurveSpec spec = order_spec(order, domain);
      for (const auto& config : configs) {
        const MissStats s = simulate(pattern, spec, config);
        rows.push_back({order.name, pattern_name(pattern), config.capacity_lines, config.line_size_elems,
                        s.accesses, s.misses});
      }
    }
  }
  return rows;
}

void write_cache_report_csv(std::ostream& out, const std::vector<CacheReportRow>& rows) {
  out << "curve,pattern,capacity,line,accesses,misses\n";
  for (const auto& r : rows) {
    out << r.curve << ',' << r.pattern << ',' << r.capacity << ',' << r.line << ',' << r.accesses << ','
        << r.misses << '\n';
  }
}

}  // namespace sfcloops
