#include <gtest/gtest.h>

#include <cstring>
#include <set>

#include "roifcn/box.hpp"
#include "roifcn/rng.hpp"
#include "roifcn/tensor.hpp"

using roifcn::Box;
using roifcn::Rng;
using roifcn::Tensor;

TEST(Tensor, ShapeDeterminesElementCount) {
  Tensor<double> t({2, 3, 4});
  EXPECT_EQ(t.rank(), 3);
  EXPECT_EQ(t.extent(0), 2);
  EXPECT_EQ(t.extent(1), 3);
  EXPECT_EQ(t.extent(2), 4);
  EXPECT_EQ(t.numel(), 24u);
  EXPECT_FALSE(t.empty());
  EXPECT_TRUE(Tensor<double>().empty());
}

TEST(Tensor, ZeroInitializedOnConstruction) {
  Tensor<float> t({3, 5});
  for (std::size_t i = 0; i < t.numel(); ++i) EXPECT_EQ(t[i], 0.0f);
}

TEST(Tensor, NegativeExtentRejected) {
  EXPECT_THROW(Tensor<float>({2, -1}), std::invalid_argument);
}

TEST(Tensor, RowMajorWidthFastest) {
  Tensor<int> t({2, 3, 4});
  t(1, 2, 3) = 42;
  EXPECT_EQ(t[1 * 12 + 2 * 4 + 3], 42);
  Tensor<int> q({2, 2, 2, 2});
  q(1, 0, 1, 0) = 7;
  EXPECT_EQ(q[1 * 8 + 0 * 4 + 1 * 2 + 0], 7);
}

TEST(Tensor, FillAndZero) {
  Tensor<double> t({4});
  t.fill(2.5);
  EXPECT_EQ(t(2), 2.5);
  t.zero();
  EXPECT_EQ(t(2), 0.0);
}

TEST(Tensor, CastPreservesShapeAndValues) {
  Tensor<float> t({2, 2});
  t(0, 1) = 1.5f;
  Tensor<double> d = t.cast<double>();
  EXPECT_EQ(d.shape(), t.shape());
  EXPECT_EQ(d(0, 1), 1.5);
}

TEST(Tensor, ShapeStrFormat) { EXPECT_EQ(roifcn::shape_str({1, 16, 16}), "[1,16,16]"); }

TEST(Rng, SameSeedSameSequence) {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DifferentSeedsDiverge) {
  Rng a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a.next_u64() == b.next_u64();
  EXPECT_LT(equal, 3);
}

TEST(Rng, StateRoundTrip) {
  Rng a(9);
  a.next_u64();
  const auto snapshot = a.state();
  const std::uint64_t expected = a.next_u64();
  Rng b(0);
  b.set_state(snapshot);
  EXPECT_EQ(b.next_u64(), expected);
}

TEST(Rng, UniformInUnitInterval) {
  Rng r(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = r.uniform();
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Rng, UniformIntCoversInclusiveRange) {
  Rng r(7);
  std::set<int> seen;
  for (int i = 0; i < 200; ++i) {
    const int v = r.uniform_int(3, 6);
    EXPECT_GE(v, 3);
    EXPECT_LE(v, 6);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 4u);
}

TEST(Box, InclusiveWidthHeightArea) {
  const Box b{2, 3, 5, 4};
  EXPECT_EQ(b.width(), 4);
  EXPECT_EQ(b.height(), 2);
  EXPECT_EQ(b.area(), 8);
  EXPECT_EQ((Box{0, 0, 0, 0}).area(), 1);
}

TEST(Box, ContainsIsInclusive) {
  const Box b{1, 1, 3, 3};
  EXPECT_TRUE(b.contains(1, 1));
  EXPECT_TRUE(b.contains(3, 3));
  EXPECT_FALSE(b.contains(4, 3));
  EXPECT_FALSE(b.contains(0, 2));
}

TEST(Box, ClipToGrid) {
  const Box c = roifcn::clip_box(Box{-2, -2, 5, 5}, 4, 4);
  EXPECT_EQ(c, (Box{0, 0, 3, 3}));
}

TEST(Box, IntersectionArea) {
  EXPECT_EQ(roifcn::intersection_area(Box{0, 0, 3, 3}, (Box{2, 2, 5, 5})), 4);
  EXPECT_EQ(roifcn::intersection_area(Box{0, 0, 1, 1}, (Box{5, 5, 6, 6})), 0);
}
