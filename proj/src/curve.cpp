// SPDX-License-Identifier: Apache-2.0

#include "sfcloops/curve.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <sstream>

namespace sfcloops {

namespace {

// Each curve is a digit automaton: at every level of the recursion a curve
// digit together with an orientation state selects one sub-cell (one
// coordinate digit per dimension) and the state for the next level.
//
// Hilbert follows the Gray-code formulation with an entry corner `e` and an
// intra-cell direction `dir` per level; state packs e | dir << 8. With the
// initial state (0, 0) the two-dimensional base motif is
// (0,0) -> (0,1) -> (1,1) -> (1,0).
//
// Z-order interleaves bits; coordinate 0 holds the most significant bit of
// each digit so that a single level is lexicographic.
//
// Peano splits each base-9 digit into two ternary digits (a, b); state packs
// the reflection parity of coordinate 0 (bit 0) and coordinate 1 (bit 1).

constexpr std::uint32_t rotl(std::uint32_t x, int r, int n) {
  const std::uint32_t mask = (1u << n) - 1;
  r %= n;
  if (r == 0) return x & mask;
  return ((x << r) | (x >> (n - r))) & mask;
}

constexpr std::uint32_t rotr(std::uint32_t x, int r, int n) {
  r %= n;
  return rotl(x, n - r, n);
}

constexpr std::uint32_t gray(std::uint32_t w) { return w ^ (w >> 1); }

constexpr std::uint32_t gray_inverse(std::uint32_t g) {
  std::uint32_t w = g;
  for (std::uint32_t s = g >> 1; s != 0; s >>= 1) w ^= s;
  return w;
}

constexpr std::uint32_t entry_corner(std::uint32_t w) {
  return w == 0 ? 0 : gray(2 * ((w - 1) / 2));
}

constexpr int intra_direction(std::uint32_t w, int n) {
  if (w == 0) return 0;
  const std::uint32_t v = (w % 2 == 0) ? w - 1 : w;
  return std::countr_one(v) % n;
}

std::uint32_t hilbert_next(std::uint32_t state, std::uint32_t w, int n) {
  const std::uint32_t e = state & 0xffu;
  const int dir = static_cast<int>(state >> 8);
  const std::uint32_t e2 = e ^ rotl(entry_corner(w), dir + 1, n);
  const int dir2 = (dir + intra_direction(w, n) + 1) % n;
  return e2 | (static_cast<std::uint32_t>(dir2) << 8);
}

std::uint32_t digits_per_level(CurveFamily family, int dims) {
  return family == CurveFamily::Peano ? 9u : (1u << dims);
}

Coord coordinate_radix(CurveFamily family) { return family == CurveFamily::Peano ? 3u : 2u; }

std::uint32_t decode_level(CurveFamily family, int n, std::uint32_t state, std::uint32_t w,
                           std::uint8_t* cell) {
  switch (family) {
    case CurveFamily::Hilbert: {
      const std::uint32_t e = state & 0xffu;
      const int dir = static_cast<int>(state >> 8);
      const std::uint32_t l = rotl(gray(w), dir + 1, n) ^ e;
      for (int j = 0; j < n; ++j) cell[j] = static_cast<std::uint8_t>((l >> j) & 1u);
      return hilbert_next(state, w, n);
    }
    case CurveFamily::ZOrder:
      for (int j = 0; j < n; ++j) cell[j] = static_cast<std::uint8_t>((w >> (n - 1 - j)) & 1u);
      return 0;
    case CurveFamily::Peano: {
      const std::uint32_t a = w / 3, b = w % 3;
      const std::uint32_t flip0 = state & 1u, flip1 = (state >> 1) & 1u;
      cell[0] = static_cast<std::uint8_t>(flip0 ? 2 - a : a);
      cell[1] = static_cast<std::uint8_t>((flip1 ^ (a & 1u)) ? 2 - b : b);
      return (flip0 ^ (b & 1u)) | ((flip1 ^ (a & 1u)) << 1);
    }
  }
  return 0;
}

std::uint32_t encode_level(CurveFamily family, int n, std::uint32_t state, const std::uint8_t* cell,
                           std::uint32_t& w) {
  switch (family) {
    case CurveFamily::Hilbert: {
      const std::uint32_t e = state & 0xffu;
      const int dir = static_cast<int>(state >> 8);
      std::uint32_t l = 0;
      for (int j = 0; j < n; ++j) l |= static_cast<std::uint32_t>(cell[j]) << j;
      w = gray_inverse(rotr(l ^ e, dir + 1, n));
      return hilbert_next(state, w, n);
    }
    case CurveFamily::ZOrder:
      w = 0;
      for (int j = 0; j < n; ++j) w |= static_cast<std::uint32_t>(cell[j]) << (n - 1 - j);
      return 0;
    case CurveFamily::Peano: {
      const std::uint32_t flip0 = state & 1u, flip1 = (state >> 1) & 1u;
      const std::uint32_t a = flip0 ? 2u - cell[0] : cell[0];
      const std::uint32_t b = (flip1 ^ (a & 1u)) ? 2u - cell[1] : cell[1];
      w = 3 * a + b;
      return (flip0 ^ (b & 1u)) | ((flip1 ^ (a & 1u)) << 1);
    }
  }
  return 0;
}

// Coordinate weight of level `level` (0 = most significant) for an order-k curve.
std::vector<Coord> level_places(CurveFamily family, int order) {
  std::vector<Coord> place(static_cast<std::size_t>(order));
  Coord p = 1;
  for (int l = order - 1; l >= 0; --l) {
    place[static_cast<std::size_t>(l)] = p;
    p *= coordinate_radix(family);
  }
  return place;
}

void check_point(const CurveSpec& spec, const GridPoint& p) {
  if (p.dims() != spec.dims()) {
    throw ContractError("point has " + std::to_string(p.dims()) + " coordinates, curve has " +
                        std::to_string(spec.dims()));
  }
  for (int j = 0; j < p.dims(); ++j) {
    if (p[j] >= spec.side()) {
      throw RangeError("coordinate " + std::to_string(p[j]) + " outside grid side " +
                       std::to_string(spec.side()));
    }
  }
}

Index major_rank(const CurveSpec& spec, const GridPoint& p) {
  Index major = 0;
  for (int m : spec.monotone_dims()) major = major * spec.side() + p[m];
  return major;
}

Index minor_index(const CurveSpec& spec, const GridPoint& p) {
  const auto residual = spec.residual_dims();
  const int n = static_cast<int>(residual.size());
  if (n == 0) return 0;
  if (n == 1) return p[residual[0]];

  const auto place = level_places(spec.family(), spec.order());
  const Coord radix = coordinate_radix(spec.family());
  const std::uint32_t digits = digits_per_level(spec.family(), n);
  std::uint32_t state = 0;
  Index minor = 0;
  std::array<std::uint8_t, kMaxDims> cell{};
  for (int l = 0; l < spec.order(); ++l) {
    for (int j = 0; j < n; ++j) {
      cell[j] = static_cast<std::uint8_t>((p[residual[j]] / place[l]) % radix);
    }
    std::uint32_t w = 0;
    state = encode_level(spec.family(), n, state, cell.data(), w);
    minor = minor * digits + w;
  }
  return minor;
}

}  // namespace

std::string_view to_string(CurveFamily family) {
  switch (family) {
    case CurveFamily::Hilbert: return "hilbert";
    case CurveFamily::ZOrder: return "zorder";
    case CurveFamily::Peano: return "peano";
  }
  return "unknown";
}

CurveFamily parse_curve_family(std::string_view name) {
  if (name == "hilbert") return CurveFamily::Hilbert;
  if (name == "zorder") return CurveFamily::ZOrder;
  if (name == "peano") return CurveFamily::Peano;
  throw ContractError("unknown curve family '" + std::string(name) + "'");
}

GridPoint::GridPoint(std::initializer_list<Coord> coords) {
  if (coords.size() > static_cast<std::size_t>(kMaxDims)) {
    throw ContractError("grid points have at most " + std::to_string(kMaxDims) + " coordinates");
  }
  dims_ = static_cast<std::uint8_t>(coords.size());
  std::copy(coords.begin(), coords.end(), coords_.begin());
}

bool operator==(const GridPoint& a, const GridPoint& b) {
  return std::ranges::equal(a.coords(), b.coords());
}

std::strong_ordering operator<=>(const GridPoint& a, const GridPoint& b) {
  return std::lexicographical_compare_three_way(a.coords().begin(), a.coords().end(),
                                                b.coords().begin(), b.coords().end());
}

std::string to_string(const GridPoint& p) {
  std::string out = "(";
  for (int j = 0; j < p.dims(); ++j) {
    if (j) out += ',';
    out += std::to_string(p[j]);
  }
  return out + ")";
}

CurveSpec CurveSpec::make(CurveFamily family, int dims, int order, std::span<const int> monotone_dims) {
  if (family == CurveFamily::Peano) {
    if (dims != 2) throw ContractError("peano curves are two-dimensional");
  } else if (dims < 2 || dims > kMaxDims) {
    throw ContractError("curve dimension must lie in [2, 6], got " + std::to_string(dims));
  }
  if (order < 0) throw ContractError("curve order must be non-negative");

  CurveSpec spec;
  spec.family_ = family;
  spec.dims_ = dims;
  spec.order_ = order;

  constexpr Index kLimit = Index{1} << 63;
  Index side = 1;
  for (int l = 0; l < order; ++l) {
    side *= coordinate_radix(family);
    if (side > std::numeric_limits<Coord>::max()) {
      throw RangeError("curve side exceeds the 32-bit coordinate range");
    }
  }
  Index cells = 1;
  for (int j = 0; j < dims; ++j) {
    if (cells > kLimit / side) throw RangeError("side^d exceeds the 64-bit index range (limit 2^63)");
    cells *= side;
  }
  spec.side_ = static_cast<Coord>(side);
  spec.cells_ = cells;

  std::array<bool, kMaxDims> monotone{};
  for (int m : monotone_dims) {
    if (m < 0 || m >= dims) throw ContractError("monotone dimension " + std::to_string(m) + " out of range");
    if (monotone[m]) throw ContractError("monotone dimension " + std::to_string(m) + " listed twice");
    monotone[m] = true;
  }
  spec.slab_cells_ = 1;
  for (int j = 0; j < dims; ++j) {
    if (monotone[j]) {
      spec.monotone_[spec.monotone_count_++] = j;
    } else {
      spec.residual_[spec.residual_count_++] = j;
      spec.slab_cells_ *= side;
    }
  }
  return spec;
}

std::string to_string(const CurveSpec& spec) {
  std::ostringstream out;
  out << to_string(spec.family()) << " d=" << spec.dims() << " k=" << spec.order();
  if (spec.has_monotone()) {
    out << " monotone={";
    for (std::size_t i = 0; i < spec.monotone_dims().size(); ++i) {
      out << (i ? "," : "") << spec.monotone_dims()[i];
    }
    out << '}';
  }
  return out.str();
}

GridPoint index_to_point(const CurveSpec& spec, Index idx) {
  if (idx >= spec.cells()) {
    throw RangeError("curve index " + std::to_string(idx) + " outside [0, " + std::to_string(spec.cells()) + ")");
  }
  GridPoint p(spec.dims());
  Index major = idx / spec.slab_cells();
  Index minor = idx % spec.slab_cells();

  const auto monotone = spec.monotone_dims();
  for (auto it = monotone.rbegin(); it != monotone.rend(); ++it) {
    p[*it] = static_cast<Coord>(major % spec.side());
    major /= spec.side();
  }

  const auto residual = spec.residual_dims();
  const int n = static_cast<int>(residual.size());
  if (n == 1) {
    p[residual[0]] = static_cast<Coord>(minor);
  } else if (n >= 2) {
    const int order = spec.order();
    const std::uint32_t digits = digits_per_level(spec.family(), n);
    std::vector<std::uint32_t> w(static_cast<std::size_t>(order));
    for (int l = order - 1; l >= 0; --l) {
      w[l] = static_cast<std::uint32_t>(minor % digits);
      minor /= digits;
    }
    const auto place = level_places(spec.family(), order);
    std::uint32_t state = 0;
    std::array<std::uint8_t, kMaxDims> cell{};
    for (int l = 0; l < order; ++l) {
      state = decode_level(spec.family(), n, state, w[l], cell.data());
      for (int j = 0; j < n; ++j) p[residual[j]] += cell[j] * place[l];
    }
  }
  return p;
}

Index point_to_index(const CurveSpec& spec, const GridPoint& p) {
  check_point(spec, p);
  return major_rank(spec, p) * spec.slab_cells() + minor_index(spec, p);
}

MonotoneKey monotone_index(const CurveSpec& spec, const GridPoint& p) {
  if (!spec.has_monotone()) {
    throw ContractError("monotone_index needs at least one monotone dimension; use point_to_index");
  }
  check_point(spec, p);
  return {major_rank(spec, p), minor_index(spec, p)};
}

CurveStepper::CurveStepper(const CurveSpec& spec, Index start)
    : spec_(spec), point_(spec.dims()) {
  if (start >= spec.cells()) {
    throw RangeError("stepper start " + std::to_string(start) + " outside [0, " +
                     std::to_string(spec.cells()) + ")");
  }
  index_ = start;
  curve_dims_ = static_cast<int>(spec.residual_dims().size());
  if (curve_dims_ >= 2) {
    radix_ = digits_per_level(spec.family(), curve_dims_);
    levels_.resize(static_cast<std::size_t>(spec.order()));
    place_ = level_places(spec.family(), spec.order());
  }
  write_major(start / spec.slab_cells());
  seed_residual(start % spec.slab_cells());
}

void CurveStepper::write_major(Index major) {
  const auto monotone = spec_.monotone_dims();
  for (auto it = monotone.rbegin(); it != monotone.rend(); ++it) {
    point_[*it] = static_cast<Coord>(major % spec_.side());
    major /= spec_.side();
    ++transitions_;
  }
}

void CurveStepper::seed_residual(Index minor) {
  const auto residual = spec_.residual_dims();
  if (curve_dims_ == 1) {
    point_[residual[0]] = static_cast<Coord>(minor);
    ++transitions_;
    return;
  }
  if (curve_dims_ == 0) return;
  for (int l = spec_.order() - 1; l >= 0; --l) {
    levels_[l].digit = static_cast<std::uint32_t>(minor % radix_);
    levels_[l].cell.fill(0);
    minor /= radix_;
  }
  for (int j = 0; j < curve_dims_; ++j) point_[residual[j]] = 0;
  if (!levels_.empty()) {
    levels_[0].state = 0;
    recompute_from(0);
  }
}

void CurveStepper::recompute_from(int level) {
  const auto residual = spec_.residual_dims();
  const int order = spec_.order();
  std::uint32_t state = levels_[level].state;
  std::array<std::uint8_t, kMaxDims> cell{};
  for (int l = level; l < order; ++l) {
    Level& lv = levels_[l];
    lv.state = state;
    state = decode_level(spec_.family(), curve_dims_, state, lv.digit, cell.data());
    for (int j = 0; j < curve_dims_; ++j) {
      Coord& c = point_[residual[j]];
      c = c - lv.cell[j] * place_[l] + cell[j] * place_[l];
      lv.cell[j] = cell[j];
    }
    ++transitions_;
  }
}

bool CurveStepper::advance() {
  if (at_end()) return false;
  ++index_;

  if (curve_dims_ >= 2) {
    int l = spec_.order() - 1;
    while (l >= 0 && levels_[l].digit == radix_ - 1) --l;
    if (l >= 0) {
      ++levels_[l].digit;
      for (int m = l + 1; m < spec_.order(); ++m) levels_[m].digit = 0;
      recompute_from(l);
      return true;
    }
    // Slab exhausted: restart the residual curve and bump the major key.
    for (auto& lv : levels_) lv.digit = 0;
    recompute_from(0);
  } else if (curve_dims_ == 1) {
    Coord& c = point_[spec_.residual_dims()[0]];
    ++transitions_;
    if (c + 1 < spec_.side()) {
      ++c;
      return true;
    }
    c = 0;
  }

  const auto monotone = spec_.monotone_dims();
  for (auto it = monotone.rbegin(); it != monotone.rend(); ++it) {
    ++transitions_;
    Coord& c = point_[*it];
    if (c + 1 < spec_.side()) {
      ++c;
      break;
    }
    c = 0;
  }
  return true;
}

CurveStepper make_stepper(const CurveSpec& spec, Index start) { return CurveStepper(spec, start); }

}  // namespace sfcloops
