#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "diststn/errors.hpp"
#include "diststn/stn.hpp"
#include "oracles.hpp"

namespace diststn {
namespace {

using testing::grid_sample_oracle;
using testing::random_tensor;

AffineParams random_affine(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.2, 1.2);
  AffineParams a;
  for (double& v : a.theta) v = d(rng);
  return a;
}

TEST(AffineGrid, CornersAligned) {
  EXPECT_DOUBLE_EQ(normalized_coordinate(0, 5), -1.0);
  EXPECT_DOUBLE_EQ(normalized_coordinate(4, 5), 1.0);
  EXPECT_DOUBLE_EQ(normalized_coordinate(2, 5), 0.0);
  Tensor g = affine_grid(AffineParams::identity(), 3, 4);
  EXPECT_EQ(g.shape(), (Shape{3, 4, 2}));
  EXPECT_DOUBLE_EQ(g[0], -1.0);
  EXPECT_DOUBLE_EQ(g[1], -1.0);
  EXPECT_DOUBLE_EQ(g[g.size() - 2], 1.0);
  EXPECT_DOUBLE_EQ(g[g.size() - 1], 1.0);
}

TEST(AffineGrid, AppliesMap) {
  const AffineParams a{{0.5, 0.25, 0.1, -0.3, 2.0, -0.2}};
  Tensor g = affine_grid(a, 4, 6);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      const double x = normalized_coordinate(j, 6), y = normalized_coordinate(i, 4);
      EXPECT_NEAR(g[(i * 6 + j) * 2], 0.5 * x + 0.25 * y + 0.1, 1e-15);
      EXPECT_NEAR(g[(i * 6 + j) * 2 + 1], -0.3 * x + 2.0 * y - 0.2, 1e-15);
    }
  }
}

TEST(AffineGrid, DegenerateSize) {
  EXPECT_THROW(affine_grid(AffineParams::identity(), 1, 5), DegenerateSize);
  EXPECT_THROW(affine_grid(AffineParams::identity(), 5, 1), DegenerateSize);
}

TEST(GridSample, MatchesDirectSumOracle) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> ext(2, 9), ch(1, 3);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t c = ch(rng), h = ext(rng), w = ext(rng);
    Tensor input = random_tensor({c, h, w}, rng);
    Tensor grid = affine_grid(random_affine(rng), h, w);
    Tape tape;
    Tensor out = grid_sample(tape, input, grid);
    const auto expected = grid_sample_oracle(input, grid);
    for (std::size_t i = 0; i < out.size(); ++i) ASSERT_NEAR(out[i], expected[i], 1e-12) << "trial " << trial;
  }
}

TEST(GridSample, IdentityIsBitExact) {
  std::mt19937_64 rng(1);
  for (std::size_t n : {2u, 3u, 7u, 16u, 33u}) {
    Tensor input = random_tensor({2, n, n + 1}, rng);
    Tensor out = warp(input, AffineParams::identity());
    for (std::size_t i = 0; i < input.size(); ++i) ASSERT_EQ(out[i], input[i]) << "n=" << n;
  }
}

TEST(GridSample, QuarterTurnIsBitExactPermutation) {
  std::mt19937_64 rng(2);
  for (std::size_t n : {2u, 5u, 16u, 31u}) {
    Tensor input = random_tensor({1, n, n}, rng);
    // x_s = -y_t, y_s = x_t
    Tensor out = warp(input, AffineParams{{0.0, -1.0, 0.0, 1.0, 0.0, 0.0}});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) ASSERT_EQ(out[i * n + j], input[j * n + (n - 1 - i)]) << "n=" << n;
    }
  }
}

TEST(GridSample, OutsideSourceIsZero) {
  Tensor input({1, 4, 4}, 1.0);
  Tensor out = warp(input, AffineParams{{1.0, 0.0, 5.0, 0.0, 1.0, 0.0}});
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(GridSample, ShapeChecks) {
  Tape tape;
  EXPECT_THROW(grid_sample(tape, Tensor({1, 4, 4}), Tensor({4, 5, 2})), ShapeMismatch);
  EXPECT_THROW(grid_sample(tape, Tensor({4, 4}), Tensor({4, 4, 2})), ShapeMismatch);
}

TEST(ComposeAffine, MatchesHomogeneousProduct) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const AffineParams a = random_affine(rng), b = random_affine(rng);
    const AffineParams c = compose_affine(a, b);
    const auto m = testing::matmul3(testing::homogeneous(a), testing::homogeneous(b));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(c[3 * i + j], m[i][j], 1e-14);
  }
}

TEST(ComposeAffine, IdentityIsNeutralAndInverseCancels) {
  const AffineParams a{{0.8, -0.2, 0.1, 0.3, 1.1, -0.4}};
  EXPECT_EQ(compose_affine(a, AffineParams::identity()), a);
  EXPECT_EQ(compose_affine(AffineParams::identity(), a), a);
  const double det = a[0] * a[4] - a[1] * a[3];
  const double i0 = a[4] / det, i1 = -a[1] / det, i3 = -a[3] / det, i4 = a[0] / det;
  const AffineParams inv{{i0, i1, -(i0 * a[2] + i1 * a[5]), i3, i4, -(i3 * a[2] + i4 * a[5])}};
  const AffineParams id = compose_affine(a, inv);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(id[k], AffineParams::identity()[k], 1e-14);
}

TEST(ComposeAffine, GridOfCompositionIsGridThroughBoth) {
  const AffineParams a{{0.9, 0.1, 0.05, -0.2, 1.0, 0.1}}, b{{1.1, 0.0, -0.1, 0.3, 0.8, 0.0}};
  Tensor gb = affine_grid(b, 5, 5);
  Tensor gc = affine_grid(compose_affine(a, b), 5, 5);
  for (std::size_t p = 0; p < 25; ++p) {
    const double x = gb[2 * p], y = gb[2 * p + 1];
    EXPECT_NEAR(gc[2 * p], a[0] * x + a[1] * y + a[2], 1e-14);
    EXPECT_NEAR(gc[2 * p + 1], a[3] * x + a[4] * y + a[5], 1e-14);
  }
}

TEST(AffineParams, TensorRoundtrip) {
  const AffineParams a{{1, 2, 3, 4, 5, 6}};
  EXPECT_EQ(AffineParams::from_tensor(a.to_tensor()), a);
  EXPECT_TRUE(a.finite());
  AffineParams bad = a;
  bad.theta[2] = std::nan("");
  EXPECT_FALSE(bad.finite());
}

}  // namespace
}  // namespace diststn
