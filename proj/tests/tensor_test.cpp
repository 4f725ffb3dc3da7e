#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "abcd/errors.hpp"
#include "abcd/random.hpp"
#include "abcd/tensor.hpp"

namespace abcd {
namespace {

FeatureMap<double> random_map(Index c, Index h, Index w, Rng& rng,
                              double lo = -3.0, double hi = 3.0) {
  FeatureMap<double> m(c, h, w);
  for (Index i = 0; i < m.size(); ++i) m.data().data()[i] = rng.uniform(lo, hi);
  return m;
}

TEST(FeatureMap, LayoutIsChannelRowColumn) {
  const FeatureMap<double> m(2, 2, 3, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  EXPECT_EQ(m(0, 0, 2), 2.0);
  EXPECT_EQ(m(0, 1, 0), 3.0);
  EXPECT_EQ(m(1, 0, 0), 6.0);
  EXPECT_EQ(m(1, 1, 2), 11.0);
  EXPECT_EQ(m.size(), 12);
  EXPECT_EQ(m.shape_string(), "2x2x3");
}

TEST(FeatureMap, RejectsBadConstruction) {
  EXPECT_THROW(FeatureMap<double>(0, 2, 2), ShapeError);
  const std::vector<double> short_values(3, 1.0);
  EXPECT_THROW(FeatureMap<double>(1, 2, 2, std::span<const double>(short_values)),
               ShapeError);
  const std::vector<double> nan_values = {1.0, NAN, 0.0, 0.0};
  EXPECT_THROW(FeatureMap<double>(1, 2, 2, std::span<const double>(nan_values)),
               InputError);
}

TEST(Kernel2D, EvenSizeIsConfigError) {
  EXPECT_THROW(Kernel2D<double>(1, 1, 2), ConfigError);
}

TEST(Mlp2, HiddenDimNeverZero) {
  EXPECT_EQ(Mlp2<double>::hidden_dim(32, 16), 2);
  EXPECT_EQ(Mlp2<double>::hidden_dim(8, 16), 1);
  EXPECT_EQ(Mlp2<double>::hidden_dim(47, 16), 2);
  const Mlp2<double> mlp(8, 16);
  EXPECT_EQ(mlp.w0().rows(), 1);
  EXPECT_EQ(mlp.w0().cols(), 8);
  EXPECT_EQ(mlp.w1().rows(), 8);
}

TEST(Conv2d, IdentityOneByOne) {
  Rng rng(1);
  const auto x = random_map(3, 4, 5, rng);
  Kernel2D<double> k(3, 3, 1);
  for (Index c = 0; c < 3; ++c) k.weight(c, c, 0, 0) = 1.0;
  EXPECT_EQ(conv2d(x, k), x);
}

TEST(Conv2d, AllOnesThreeByThreeHandValues) {
  const FeatureMap<double> x(1, 3, 3, 1.0);
  Kernel2D<double> k(1, 1, 3);
  k.weights().setOnes();
  const auto y = conv2d(x, k);
  EXPECT_EQ(y(0, 1, 1), 9.0);
  for (const auto [yy, xx] : {std::pair{0, 0}, {0, 2}, {2, 0}, {2, 2}}) {
    EXPECT_EQ(y(0, yy, xx), 4.0);
  }
  for (const auto [yy, xx] : {std::pair{0, 1}, {1, 0}, {1, 2}, {2, 1}}) {
    EXPECT_EQ(y(0, yy, xx), 6.0);
  }
}

TEST(Conv2d, ZeroWeightsGiveBias) {
  Rng rng(2);
  const auto x = random_map(2, 5, 5, rng);
  Kernel2D<double> k(3, 2, 7);
  k.bias() << 1.5, -2.0, 0.25;
  const auto y = conv2d(x, k);
  for (Index o = 0; o < 3; ++o) {
    EXPECT_TRUE((y.data().row(o).array() == k.bias()(o)).all());
  }
}

TEST(Conv2d, ChannelMismatchIsShapeError) {
  const FeatureMap<double> x(2, 3, 3);
  EXPECT_THROW(conv2d(x, Kernel2D<double>(1, 3, 1)), ShapeError);
}

TEST(Conv2d, IsLinear) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_map(2, 6, 7, rng);
    const auto y = random_map(2, 6, 7, rng);
    Kernel2D<double> k(3, 2, 3);
    for (Index i = 0; i < k.weights().size(); ++i) k.weights()(i) = rng.uniform(-1, 1);
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    FeatureMap<double> mix(2, 6, 7);
    mix.data() = a * x.data() + b * y.data();
    const auto lhs = conv2d(mix, k);
    const RowMajorMatrix<double> rhs =
        a * conv2d(x, k).data() + b * conv2d(y, k).data();
    const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
    EXPECT_LE((lhs.data() - rhs).cwiseAbs().maxCoeff() / scale, 1e-6);
  }
}

TEST(GlobalPool, HandValues) {
  const FeatureMap<double> x(1, 2, 2, {1, 2, 3, 4});
  EXPECT_EQ(global_pool(x, PoolMode::kAvg)(0), 2.5);
  EXPECT_EQ(global_pool(x, PoolMode::kMax)(0), 4.0);
  const FeatureMap<double> neg(1, 3, 3, -5.0);
  EXPECT_EQ(global_pool(neg, PoolMode::kMax)(0), -5.0);
  const FeatureMap<double> c(3, 4, 4, 0.75);
  EXPECT_TRUE((global_pool(c, PoolMode::kAvg).array() == 0.75).all());
  EXPECT_TRUE((global_pool(c, PoolMode::kMax).array() == 0.75).all());
}

TEST(GlobalPool, AvgNeverExceedsMax) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_map(4, 3, 5, rng);
    EXPECT_TRUE((global_pool(x, PoolMode::kAvg).array() <=
                 global_pool(x, PoolMode::kMax).array())
                    .all());
  }
}

TEST(ChannelStatPool, Reductions) {
  FeatureMap<double> x(2, 2, 2);
  x.data().row(0).setConstant(1.0);
  x.data().row(1).setConstant(3.0);
  const auto s = channel_stat_pool(x);
  ASSERT_EQ(s.channels(), 2);
  EXPECT_TRUE((s.data().row(0).array() == 2.0).all());
  EXPECT_TRUE((s.data().row(1).array() == 3.0).all());

  Rng rng(5);
  const auto one = random_map(1, 3, 4, rng);
  const auto s1 = channel_stat_pool(one);
  EXPECT_EQ(s1.data().row(0), one.data().row(0));
  EXPECT_EQ(s1.data().row(1), one.data().row(0));

  const auto z = channel_stat_pool(FeatureMap<double>(3, 2, 2));
  EXPECT_TRUE((z.data().array() == 0.0).all());
}

TEST(Dense2, HandValues) {
  Matrix<double> w0(1, 1), w1(1, 1);
  w0 << 2.0;
  w1 << 3.0;
  const Mlp2<double> mlp(1, 1, w0, Vector<double>::Zero(1), w1,
                         Vector<double>::Zero(1));
  Vector<double> v(1);
  v << -1.0;
  EXPECT_EQ(dense2(v, mlp)(0), 0.0);
  v << 1.0;
  EXPECT_EQ(dense2(v, mlp)(0), 6.0);
  EXPECT_TRUE(dense2(Vector<double>(Vector<double>::Ones(4)), Mlp2<double>(4, 2)).isZero());
  EXPECT_THROW(dense2(Vector<double>(Vector<double>::Ones(3)), Mlp2<double>(4, 2)), ShapeError);
}

TEST(Activate, SigmoidAndRelu) {
  const FeatureMap<double> zero(2, 3, 3);
  EXPECT_TRUE((activate(zero, Activation::kSigmoid).data().array() == 0.5).all());
  const FeatureMap<double> neg(1, 2, 2, -1.5);
  EXPECT_TRUE((activate(neg, Activation::kRelu).data().array() == 0.0).all());
  Rng rng(6);
  const auto x = random_map(3, 8, 8, rng, -30.0, 30.0);
  const auto s = activate(x, Activation::kSigmoid);
  EXPECT_TRUE((s.data().array() > 0.0).all());
  EXPECT_TRUE((s.data().array() < 1.0).all());
}

TEST(Activate, SigmoidIsStableForLargeLogits) {
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_TRUE(std::isfinite(sigmoid(-745.0)));
}

TEST(ResizeNearest, IdentityAndReplication) {
  Rng rng(7);
  const auto x = random_map(2, 5, 3, rng);
  EXPECT_EQ(resize_nearest(x, 5, 3), x);

  const FeatureMap<double> small(1, 2, 2, {1, 2, 3, 4});
  const auto big = resize_nearest(small, 4, 4);
  for (Index y = 0; y < 4; ++y) {
    for (Index xx = 0; xx < 4; ++xx) {
      EXPECT_EQ(big(0, y, xx), small(0, y / 2, xx / 2));
    }
  }
  const FeatureMap<double> c(1, 4, 4, 2.5);
  EXPECT_TRUE((resize_nearest(c, 2, 2).data().array() == 2.5).all());
}

TEST(ResizeNearest, IntegerFactorRoundTrip) {
  Rng rng(8);
  const auto x = random_map(3, 4, 6, rng);
  for (const Index f : {2, 3, 4}) {
    const auto up = resize_nearest(x, 4 * f, 6 * f);
    EXPECT_EQ(resize_nearest(up, 4, 6), x);
  }
}

TEST(Elementwise, Broadcasts) {
  Rng rng(9);
  const auto x = random_map(3, 4, 4, rng);
  EXPECT_EQ(elementwise(BinaryOp::kMul, x, Vector<double>(Vector<double>::Ones(3))), x);
  FeatureMap<double> negated(3, 4, 4);
  negated.data() = -x.data();
  EXPECT_TRUE((elementwise(BinaryOp::kAdd, x, negated).data().array() == 0.0).all());

  const FeatureMap<double> ones(2, 2, 2, 1.0);
  const FeatureMap<double> per_channel(2, 1, 1, {2.0, 3.0});
  const auto y = elementwise(BinaryOp::kMul, ones, per_channel);
  EXPECT_TRUE((y.data().row(0).array() == 2.0).all());
  EXPECT_TRUE((y.data().row(1).array() == 3.0).all());

  const FeatureMap<double> spatial(1, 2, 2, {1, 2, 3, 4});
  const auto z = elementwise(BinaryOp::kMul, ones, spatial);
  EXPECT_EQ(z(1, 1, 0), 3.0);
  EXPECT_EQ(z(0, 0, 1), 2.0);

  EXPECT_THROW(elementwise(BinaryOp::kAdd, ones, FeatureMap<double>(2, 3, 3)),
               ShapeError);
  EXPECT_THROW(elementwise(BinaryOp::kMul, ones, Vector<double>(Vector<double>::Ones(3))),
               ShapeError);
}

TEST(Fuzz, FiniteInFiniteOut) {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_map(3, 5, 6, rng, -50.0, 50.0);
    Kernel2D<double> k(2, 3, 3);
    for (Index i = 0; i < k.weights().size(); ++i) k.weights()(i) = rng.uniform(-1, 1);
    EXPECT_TRUE(conv2d(x, k).all_finite());
    EXPECT_TRUE(activate(x, Activation::kSigmoid).all_finite());
    EXPECT_TRUE(channel_stat_pool(x).all_finite());
    EXPECT_TRUE(resize_nearest(x, 3, 11).all_finite());
    EXPECT_TRUE(global_pool(x, PoolMode::kAvg).allFinite());
  }
}

TEST(Rng, Deterministic) {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng c(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(c.below(7), 7u);
  }
}

}  // namespace
}  // namespace abcd
