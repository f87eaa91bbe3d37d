// SPDX-License-Identifier: Apache-2.0
//
// Space-filling curve mappings over d-dimensional grids.
//
// Three families are supported: Hilbert (Gray-code construction, d in 2..6),
// Z-order (bit interleaving, d in 2..6) and Peano (serpentine base-3, d = 2).
// A CurveSpec may additionally name a set of monotone dimensions; the order
// it describes is then slab-major: the monotone coordinates, compared
// lexicographically, form the major key and the curve index of the remaining
// dimensions the minor key.
//
// Curve indices are 64-bit. Specs whose cell count exceeds 2^63 are rejected.

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sfcloops {

using Index = std::uint64_t;
using Coord = std::uint32_t;

inline constexpr int kMaxDims = 6;

/// Thrown when an index or coordinate lies outside the grid.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Thrown when arguments violate an operation's preconditions.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class CurveFamily { Hilbert, ZOrder, Peano };

std::string_view to_string(CurveFamily family);
/// Accepts "hilbert", "zorder" and "peano" (case-sensitive).
CurveFamily parse_curve_family(std::string_view name);

/// A point of a grid with at most kMaxDims dimensions.
class GridPoint {
 public:
  GridPoint() = default;
  explicit GridPoint(int dims) : dims_(static_cast<std::uint8_t>(dims)) {}
  GridPoint(std::initializer_list<Coord> coords);

  int dims() const { return dims_; }
  Coord& operator[](int i) { return coords_[i]; }
  Coord operator[](int i) const { return coords_[i]; }
  std::span<const Coord> coords() const { return {coords_.data(), dims_}; }

  friend bool operator==(const GridPoint& a, const GridPoint& b);
  friend std::strong_ordering operator<=>(const GridPoint& a, const GridPoint& b);

 private:
  std::array<Coord, kMaxDims> coords_{};
  std::uint8_t dims_ = 0;
};

std::string to_string(const GridPoint& p);

class CurveSpec {
 public:
  /// Validates and builds a spec. `monotone_dims` may be listed in any order;
  /// the lowest dimension index is the most significant major key.
  static CurveSpec make(CurveFamily family, int dims, int order,
                        std::span<const int> monotone_dims = {});
  static CurveSpec make(CurveFamily family, int dims, int order,
                        std::initializer_list<int> monotone_dims) {
    return make(family, dims, order, std::span<const int>(monotone_dims.begin(), monotone_dims.size()));
  }

  CurveFamily family() const { return family_; }
  int dims() const { return dims_; }
  int order() const { return order_; }
  Coord side() const { return side_; }
  /// side^dims.
  Index cells() const { return cells_; }

  bool has_monotone() const { return monotone_count_ > 0; }
  /// Monotone dimensions in ascending order.
  std::span<const int> monotone_dims() const { return {monotone_.data(), static_cast<std::size_t>(monotone_count_)}; }
  /// Non-monotone dimensions in ascending order.
  std::span<const int> residual_dims() const { return {residual_.data(), static_cast<std::size_t>(residual_count_)}; }
  /// side^(number of residual dims): the size of one slab.
  Index slab_cells() const { return slab_cells_; }

  friend bool operator==(const CurveSpec&, const CurveSpec&) = default;

 private:
  CurveSpec() = default;

  CurveFamily family_ = CurveFamily::Hilbert;
  int dims_ = 0;
  int order_ = 0;
  Coord side_ = 1;
  Index cells_ = 1;
  Index slab_cells_ = 1;
  std::array<int, kMaxDims> monotone_{};
  std::array<int, kMaxDims> residual_{};
  int monotone_count_ = 0;
  int residual_count_ = 0;
};

std::string to_string(const CurveSpec& spec);

/// The idx-th cell in the order described by `spec`.
GridPoint index_to_point(const CurveSpec& spec, Index idx);
/// Inverse of index_to_point.
Index point_to_index(const CurveSpec& spec, const GridPoint& p);

/// Composite key of a monotone-constrained order. `major` is the
/// lexicographic rank of the monotone coordinates, `minor` the curve index of
/// the residual coordinates.
struct MonotoneKey {
  Index major = 0;
  Index minor = 0;

  /// Position in the flattened order; equals point_to_index for the same spec.
  Index flat(const CurveSpec& spec) const { return major * spec.slab_cells() + minor; }

  friend auto operator<=>(const MonotoneKey&, const MonotoneKey&) = default;
};

/// Requires spec.has_monotone(); throws ContractError otherwise.
MonotoneKey monotone_index(const CurveSpec& spec, const GridPoint& p);

/// Walks a curve one cell at a time. Only the levels of the recursion that
/// change are recomputed, so a full traversal costs amortized O(1) level
/// updates per step.
class CurveStepper {
 public:
  CurveStepper(const CurveSpec& spec, Index start);

  const CurveSpec& spec() const { return spec_; }
  Index index() const { return index_; }
  const GridPoint& point() const { return point_; }
  bool at_end() const { return index_ + 1 == spec_.cells(); }

  /// Moves to the next cell. Returns false (and stays put) on the last cell.
  bool advance();

  /// Number of recursion-level and slab-counter updates performed so far,
  /// including the initial positioning.
  std::uint64_t transitions() const { return transitions_; }

 private:
  struct Level {
    std::uint32_t digit = 0;   // curve digit at this level
    std::uint32_t state = 0;   // orientation state on entry to this level
    std::array<std::uint8_t, kMaxDims> cell{};  // coordinate digits produced
  };

  void seed_residual(Index minor);
  void recompute_from(int level);
  void write_major(Index major);

  CurveSpec spec_;
  Index index_ = 0;
  GridPoint point_;
  std::vector<Level> levels_;   // levels_[0] is the most significant
  std::vector<Coord> place_;    // coordinate weight of each level
  std::uint32_t radix_ = 0;     // curve digits per level
  int curve_dims_ = 0;          // residual dimensions walked by the automaton
  std::uint64_t transitions_ = 0;
};

CurveStepper make_stepper(const CurveSpec& spec, Index start);

}  // namespace sfcloops
