#include <gtest/gtest.h>

#include <random>

#include "pgnn/metrics.hpp"
#include "support/oracles.hpp"

using namespace pgnn;

TEST(Nrmse, PerfectPredictionIsZero) {
  const std::vector<double> obs = {1, 4, 2, 8};
  EXPECT_EQ(nrmse(obs, obs), 0.0);
}

TEST(Nrmse, HandArithmetic) {
  const std::vector<double> obs = {0, 10}, pred = {1, 9};
  EXPECT_DOUBLE_EQ(rmse(pred, obs), 1.0);
  EXPECT_DOUBLE_EQ(nrmse(pred, obs), 0.1);
}

TEST(Nrmse, MatchesLoopOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_int_distribution<std::size_t> len(2, 300);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(len(rng)), b(a.size());
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    EXPECT_NEAR(nrmse(a, b), pgnn::testing::nrmse_loop(a, b), 1e-13);
  }
}

TEST(Nrmse, InvariantUnderJointScaling) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<double> a(64), b(64);
  for (auto& x : a) x = g(rng);
  for (auto& x : b) x = g(rng);
  const double base = nrmse(a, b);
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    std::vector<double> ca(a), cb(b);
    for (auto& x : ca) x *= c;
    for (auto& x : cb) x *= c;
    EXPECT_NEAR(nrmse(ca, cb), base, 1e-12 * base);
  }
}

TEST(Nrmse, Errors) {
  const std::vector<double> one = {1}, two = {1, 2}, flat = {3, 3, 3}, three = {1, 2, 3};
  EXPECT_THROW(nrmse(one, one), ShapeError);
  EXPECT_THROW(nrmse(two, three), ShapeError);
  EXPECT_THROW(nrmse(three, flat), DataError);
}

TEST(Ranks, TiesShareAverage) {
  const std::vector<double> v = {10, 20, 20, 5};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Spearman, MonotoneAndReversed) {
  const std::vector<double> x = {0, 0.1, 0.2, 0.5, 1.0};
  const std::vector<double> up = {1, 2, 30, 31, 100}, down = {9, 8, 7, 1, 0};
  EXPECT_DOUBLE_EQ(spearman(x, up), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, down), -1.0);
}

TEST(Pearson, ConstantSideIsZero) {
  const std::vector<double> x = {1, 2, 3}, c = {4, 4, 4};
  EXPECT_EQ(pearson(x, c), 0.0);
}

TEST(Median, OddEven) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_THROW(median({}), ShapeError);
}
