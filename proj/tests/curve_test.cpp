// SPDX-License-Identifier: Apache-2.0

#include "sfcloops/curve.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <set>
#include <tuple>

using namespace sfcloops;

namespace {

int l1(const GridPoint& a, const GridPoint& b) {
  int s = 0;
  for (int j = 0; j < a.dims(); ++j) s += std::abs(static_cast<int>(a[j]) - static_cast<int>(b[j]));
  return s;
}

std::vector<CurveSpec> small_specs() {
  std::vector<CurveSpec> specs;
  for (auto family : {CurveFamily::Hilbert, CurveFamily::ZOrder}) {
    for (int d : {2, 3, 4}) {
      for (int k = 0; k <= (d == 4 ? 2 : 4); ++k) specs.push_back(CurveSpec::make(family, d, k));
    }
  }
  for (int k = 0; k <= 3; ++k) specs.push_back(CurveSpec::make(CurveFamily::Peano, 2, k));
  return specs;
}

}  // namespace

TEST(Curve, HilbertBaseMotif) {
  const auto spec = CurveSpec::make(CurveFamily::Hilbert, 2, 1);
  EXPECT_EQ(index_to_point(spec, 0), GridPoint({0, 0}));
  EXPECT_EQ(index_to_point(spec, 1), GridPoint({0, 1}));
  EXPECT_EQ(index_to_point(spec, 2), GridPoint({1, 1}));
  EXPECT_EQ(index_to_point(spec, 3), GridPoint({1, 0}));
}

TEST(Curve, Hilbert2DMatchesRecursiveConstruction) {
  for (int k = 1; k <= 6; ++k) {
    const auto spec = CurveSpec::make(CurveFamily::Hilbert, 2, k);
    const auto expected = oracle::hilbert2d(k);
    ASSERT_EQ(expected.size(), spec.cells());
    for (Index i = 0; i < spec.cells(); ++i) {
      const auto [x, y] = expected[i];
      ASSERT_EQ(index_to_point(spec, i), GridPoint({x, y})) << "k=" << k << " i=" << i;
    }
  }
}

TEST(Curve, EveryCurveStartsAtOrigin) {
  for (const auto& spec : small_specs()) {
    EXPECT_EQ(index_to_point(spec, 0), GridPoint(spec.dims())) << to_string(spec);
  }
}

TEST(Curve, ZOrderInterleavesBits) {
  const auto k1 = CurveSpec::make(CurveFamily::ZOrder, 2, 1);
  EXPECT_EQ(index_to_point(k1, 3), GridPoint({1, 1}));
  const auto k2 = CurveSpec::make(CurveFamily::ZOrder, 2, 2);
  EXPECT_EQ(point_to_index(k2, GridPoint({0, 0})), 0u);
  // coordinate 0 holds the high bit of every digit: (2,1) = x 10, y 01 -> 1001
  EXPECT_EQ(point_to_index(k2, GridPoint({2, 1})), 0b1001u);
}

TEST(Curve, HilbertRoundTripSeven) {
  const auto spec = CurveSpec::make(CurveFamily::Hilbert, 2, 2);
  EXPECT_EQ(point_to_index(spec, index_to_point(spec, 7)), 7u);
}

TEST(Curve, PeanoFirstLevelIsSerpentine) {
  const auto spec = CurveSpec::make(CurveFamily::Peano, 2, 1);
  const std::vector<GridPoint> expected = {{0, 0}, {0, 1}, {0, 2}, {1, 2}, {1, 1}, {1, 0}, {2, 0}, {2, 1}, {2, 2}};
  for (Index i = 0; i < 9; ++i) EXPECT_EQ(index_to_point(spec, i), expected[i]);
}

TEST(Curve, BijectionAndInverse) {
  for (const auto& spec : small_specs()) {
    std::set<GridPoint> seen;
    for (Index i = 0; i < spec.cells(); ++i) {
      const GridPoint p = index_to_point(spec, i);
      for (int j = 0; j < p.dims(); ++j) ASSERT_LT(p[j], spec.side());
      ASSERT_EQ(point_to_index(spec, p), i) << to_string(spec);
      seen.insert(p);
    }
    EXPECT_EQ(seen.size(), spec.cells()) << to_string(spec);
  }
}

TEST(Curve, ContinuityByFamily) {
  for (const auto& spec : small_specs()) {
    int jumps = 0;
    for (Index i = 1; i < spec.cells(); ++i) {
      if (l1(index_to_point(spec, i - 1), index_to_point(spec, i)) != 1) ++jumps;
    }
    if (spec.family() == CurveFamily::ZOrder && spec.order() >= 1) {
      EXPECT_GT(jumps, 0) << to_string(spec);
    } else {
      EXPECT_EQ(jumps, 0) << to_string(spec);
    }
  }
}

TEST(Curve, HilbertHigherDimensionsSampled) {
  std::mt19937_64 rng(11);
  for (int d : {4, 5, 6}) {
    const auto spec = CurveSpec::make(CurveFamily::Hilbert, d, 4);
    std::uniform_int_distribution<Index> pick(0, spec.cells() - 2);
    for (int s = 0; s < 2000; ++s) {
      const Index i = pick(rng);
      const GridPoint p = index_to_point(spec, i);
      ASSERT_EQ(point_to_index(spec, p), i);
      ASSERT_EQ(l1(p, index_to_point(spec, i + 1)), 1);
    }
  }
}

TEST(Curve, StepperMatchesMapping) {
  std::mt19937_64 rng(5);
  for (const auto& spec : small_specs()) {
    std::uniform_int_distribution<Index> pick(0, spec.cells() - 1);
    const Index start = pick(rng);
    CurveStepper stepper = make_stepper(spec, start);
    for (Index i = start; i < spec.cells(); ++i) {
      ASSERT_EQ(stepper.index(), i);
      ASSERT_EQ(stepper.point(), index_to_point(spec, i)) << to_string(spec) << " i=" << i;
      ASSERT_EQ(stepper.advance(), i + 1 < spec.cells());
    }
    EXPECT_EQ(stepper.index(), spec.cells() - 1);
    EXPECT_TRUE(stepper.at_end());
  }
}

TEST(Curve, StepperIsAmortizedConstant) {
  for (auto [family, d, k] : {std::tuple{CurveFamily::Hilbert, 2, 8}, std::tuple{CurveFamily::Hilbert, 3, 5},
                              std::tuple{CurveFamily::ZOrder, 2, 8}, std::tuple{CurveFamily::Peano, 2, 5}}) {
    const auto spec = CurveSpec::make(family, d, k);
    CurveStepper stepper(spec, 0);
    while (stepper.advance()) {
    }
    const double per_step = static_cast<double>(stepper.transitions()) / static_cast<double>(spec.cells());
    EXPECT_LE(per_step, 2.0) << to_string(spec);
  }
}

TEST(Curve, RangeErrors) {
  const auto spec = CurveSpec::make(CurveFamily::Hilbert, 2, 2);
  EXPECT_THROW(index_to_point(spec, 16), RangeError);
  EXPECT_THROW(point_to_index(spec, GridPoint({4, 0})), RangeError);
  EXPECT_THROW(make_stepper(spec, 16), RangeError);
  EXPECT_THROW(point_to_index(spec, GridPoint({1, 1, 1})), ContractError);
}

TEST(Curve, SpecValidation) {
  EXPECT_THROW(CurveSpec::make(CurveFamily::Peano, 3, 1), ContractError);
  EXPECT_THROW(CurveSpec::make(CurveFamily::Hilbert, 1, 1), ContractError);
  EXPECT_THROW(CurveSpec::make(CurveFamily::ZOrder, 7, 1), ContractError);
  EXPECT_THROW(CurveSpec::make(CurveFamily::Hilbert, 2, 2, {2}), ContractError);
  EXPECT_THROW(CurveSpec::make(CurveFamily::Hilbert, 2, 2, {0, 0}), ContractError);
  // 6 x 11 = 66 index bits
  EXPECT_THROW(CurveSpec::make(CurveFamily::Hilbert, 6, 11), RangeError);
  EXPECT_NO_THROW(CurveSpec::make(CurveFamily::Hilbert, 3, 21));
  EXPECT_THROW(CurveSpec::make(CurveFamily::Peano, 2, 20), RangeError);
  EXPECT_EQ(parse_curve_family("peano"), CurveFamily::Peano);
  EXPECT_THROW(parse_curve_family("moore"), ContractError);
}

TEST(Curve, LargeIndicesRoundTrip) {
  const auto spec = CurveSpec::make(CurveFamily::Hilbert, 3, 21);
  for (Index i : {Index{0}, spec.cells() / 3, spec.cells() - 1}) {
    EXPECT_EQ(point_to_index(spec, index_to_point(spec, i)), i);
  }
}

TEST(Monotone, FirstCoordinateNondecreasing) {
  for (auto family : {CurveFamily::Hilbert, CurveFamily::ZOrder, CurveFamily::Peano}) {
    const auto spec = CurveSpec::make(family, 2, 3, {0});
    CurveStepper stepper(spec, 0);
    Coord last = 0;
    do {
      ASSERT_GE(stepper.point()[0], last);
      last = stepper.point()[0];
    } while (stepper.advance());
  }
}

TEST(Monotone, AllDimsIsLexicographic) {
  const auto spec = CurveSpec::make(CurveFamily::Hilbert, 2, 2, {0, 1});
  Index i = 0;
  for (Coord x = 0; x < 4; ++x) {
    for (Coord y = 0; y < 4; ++y) EXPECT_EQ(index_to_point(spec, i++), GridPoint({x, y}));
  }
}

TEST(Monotone, SlabsFollowTwoDimensionalCurve) {
  const auto spec = CurveSpec::make(CurveFamily::Hilbert, 3, 2, {2});
  const auto slab = oracle::hilbert2d(2);
  Index i = 0;
  for (Coord z = 0; z < 4; ++z) {
    for (auto [x, y] : slab) EXPECT_EQ(index_to_point(spec, i++), GridPoint({x, y, z}));
  }
}

TEST(Monotone, KeyOrderAgreesWithIndex) {
  const auto spec = CurveSpec::make(CurveFamily::ZOrder, 3, 2, {1});
  MonotoneKey prev{};
  for (Index i = 0; i < spec.cells(); ++i) {
    const GridPoint p = index_to_point(spec, i);
    const MonotoneKey key = monotone_index(spec, p);
    EXPECT_EQ(key.flat(spec), i);
    if (i > 0) {
      EXPECT_LT(prev, key);
    }
    prev = key;
  }
}

TEST(Monotone, StepperHonoursSlabs) {
  for (auto monotone : {std::vector<int>{0}, std::vector<int>{1, 2}, std::vector<int>{0, 1, 2}}) {
    const auto spec = CurveSpec::make(CurveFamily::Hilbert, 3, 2, monotone);
    CurveStepper stepper(spec, 5);
    for (Index i = 5; i < spec.cells(); ++i) {
      ASSERT_EQ(stepper.point(), index_to_point(spec, i));
      stepper.advance();
    }
  }
}

TEST(Monotone, RequiresMonotoneDims) {
  const auto spec = CurveSpec::make(CurveFamily::Hilbert, 2, 2);
  EXPECT_THROW(monotone_index(spec, GridPoint({0, 0})), ContractError);
}
