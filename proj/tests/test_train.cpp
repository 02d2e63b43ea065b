#include <gtest/gtest.h>

#include "pgnn/train.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace pgnn;
using pgnn::testing::quick_train;
using pgnn::testing::small_synthetic;

TEST(MakeWindows, NeverCrossSegments) {
  const std::vector<RowRange> segs = {{0, 70}, {70, 100}};
  const auto w = make_windows(segs, 32);
  const std::vector<RowRange> expected = {{0, 32}, {32, 64}, {64, 70}, {70, 100}};
  EXPECT_EQ(w, expected);
}

TEST(MakeWindows, FoldsTrailingSingleRow) {
  const std::vector<RowRange> segs = {{0, 65}};
  const auto w = make_windows(segs, 32);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[1].begin, 32u);
  EXPECT_EQ(w[1].end, 65u);
}

TEST(Train, ZeroEpochsLeavesModelUnchanged) {
  const auto d = small_synthetic();
  const Mlp m0 = make_mlp({10, 30, 30, 30, 7}, 1);
  const auto r = train(m0, {&d.train, &d.validation}, LossSpec::mse(), quick_train(0));
  EXPECT_EQ(r.model, m0);
  EXPECT_TRUE(r.log.epochs.empty());
}

TEST(Train, LambdaZeroCompositeMatchesMseBitForBit) {
  const auto d = small_synthetic();
  const Mlp m0 = make_mlp({10, 30, 30, 30, 7}, 4);
  const auto phys = physics_config(d.target_scaler, 0.0);
  const auto a = train(m0, {&d.train, &d.validation}, LossSpec::mse(phys), quick_train(3, 4));
  const auto b = train(m0, {&d.train, &d.validation}, LossSpec::composite(phys), quick_train(3, 4));
  EXPECT_EQ(a.model, b.model);
  ASSERT_EQ(a.log.epochs.size(), b.log.epochs.size());
  for (std::size_t e = 0; e < a.log.epochs.size(); ++e) {
    EXPECT_EQ(a.log.epochs[e].train.total, b.log.epochs[e].train.total);
    EXPECT_EQ(a.log.epochs[e].validation.total, b.log.epochs[e].validation.total);
  }
}

TEST(Train, SameSeedIsDeterministic) {
  const auto d = small_synthetic();
  const Mlp m0 = make_mlp({10, 30, 30, 30, 7}, 2);
  const auto loss = LossSpec::composite(physics_config(d.target_scaler, 0.36));
  const auto a = train(m0, {&d.train, &d.validation}, loss, quick_train(2, 9));
  const auto b = train(m0, {&d.train, &d.validation}, loss, quick_train(2, 9));
  EXPECT_EQ(a.model, b.model);
  const auto c = train(m0, {&d.train, &d.validation}, loss, quick_train(2, 10));
  EXPECT_NE(a.model, c.model);
}

TEST(Train, ValidationLossDecreasesOnSynthetic) {
  const auto d = small_synthetic();
  const Mlp m0 = make_mlp({10, 30, 30, 30, 7}, 1);
  const auto loss = LossSpec::mse(physics_config(d.target_scaler, 0.0));
  const double before = evaluate_set(m0, d.validation, loss).l_data;
  const auto r = train(m0, {&d.train, &d.validation}, loss, quick_train(50));
  ASSERT_EQ(r.log.epochs.size(), 50u);
  EXPECT_LT(r.log.epochs.back().validation.l_data, before);
  EXPECT_LT(r.log.epochs.back().validation.l_data, 0.5 * before);
}

TEST(Train, MaskedWeightsStayZero) {
  const auto d = small_synthetic();
  Mlp m0 = make_mlp({10, 30, 30, 30, 7}, 3);
  m0.ensure_masks();
  for (std::size_t k = 0; k < 10; ++k) m0.masks[0](k, k) = 0.0;
  m0.masks[3](6, 29) = 0.0;
  m0.apply_masks();
  const auto r = train(m0, {&d.train, &d.validation},
                       LossSpec::composite(physics_config(d.target_scaler, 0.36)), quick_train(2));
  for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(r.model.weights[0](k, k), 0.0);
  EXPECT_EQ(r.model.weights[3](6, 29), 0.0);
  EXPECT_EQ(r.model.masks, m0.masks);
}

TEST(Train, DivergenceReportsEpoch) {
  const auto d = small_synthetic();
  TrainConfig c = quick_train(5);
  c.optimizer = Optimizer::Sgd;
  c.learning_rate = 1e6;
  try {
    train(make_mlp({10, 30, 30, 30, 7}, 1), {&d.train, &d.validation}, LossSpec::mse(), c);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_GE(e.epoch(), 1u);
    EXPECT_LE(e.epoch(), 5u);
  }
}

TEST(Train, LossThresholdStopsEarly) {
  const auto d = small_synthetic();
  TrainConfig c = quick_train(50);
  c.loss_threshold = 1e9;
  const auto r = train(make_mlp({10, 30, 30, 30, 7}, 1), {&d.train, &d.validation}, LossSpec::mse(), c);
  EXPECT_EQ(r.log.epochs.size(), 1u);
  EXPECT_TRUE(r.log.stopped_early);
}

TEST(Train, PhysicsNeedsBatchOfTwo) {
  const auto d = small_synthetic();
  TrainConfig c = quick_train(1);
  c.batch_size = 1;
  EXPECT_THROW(train(make_mlp({10, 30, 30, 30, 7}, 1), {&d.train, nullptr},
                     LossSpec::composite(physics_config(d.target_scaler, 0.5)), c),
               ConfigError);
  // Pure MSE is fine with single-row batches.
  c.epochs = 0;
  EXPECT_NO_THROW(train(make_mlp({10, 30, 30, 30, 7}, 1), {&d.train, nullptr}, LossSpec::mse(), c));
}

TEST(Train, ShapeMismatchRejected) {
  const auto d = small_synthetic();
  EXPECT_THROW(train(make_mlp({9, 5, 7}, 1), {&d.train, nullptr}, LossSpec::mse(), quick_train(1)),
               ShapeError);
}

TEST(Train, LogCarriesResidualColumns) {
  const auto d = small_synthetic();
  const auto loss = LossSpec::composite(physics_config(d.target_scaler, 0.36));
  const auto r = train(make_mlp({10, 30, 30, 30, 7}, 1), {&d.train, &d.validation}, loss, quick_train(2));
  for (const auto& e : r.log.epochs) {
    EXPECT_GT(e.train.r1, 0.0);
    EXPECT_GT(e.train.r2, 0.0);
    EXPECT_NEAR(e.validation.total, e.validation.l_data + 0.36 * (e.validation.r1 + e.validation.r2),
                1e-12);
  }
}
