#include <gtest/gtest.h>

#include <fstream>

#include "pgnn/eval.hpp"
#include "pgnn/train.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace pgnn;
using pgnn::testing::quick_train;
using pgnn::testing::small_synthetic;

namespace {

struct Fixture {
  PreparedData data = small_synthetic(2, 3000);
  CompositeLossConfig physics = physics_config(data.target_scaler, 0.36);
  Mlp model;
  Fixture() {
    model = train(make_mlp({10, 30, 30, 30, 7}, 1), {&data.train, &data.validation},
                  LossSpec::mse(physics), quick_train(20))
                .model;
  }
  EvalSet test() const { return EvalSet::test_of(data, physics); }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(f, line);) out.push_back(line);
  return out;
}

std::size_t count_fields(const std::string& line) { return std::ranges::count(line, ',') + 1; }

}  // namespace

TEST(EvaluateVariant, PerfectPredictionScoresZero) {
  const auto& f = fixture();
  const auto set = f.test();
  const auto r = detail::report_from_prediction(f.data.test.y, set, "oracle");
  ASSERT_EQ(r.nrmse.size(), kTargetCount);
  for (double v : r.nrmse) EXPECT_LT(v, 1e-12);
}

TEST(EvaluateVariant, ReportCarriesEveryTargetAndResiduals) {
  const auto& f = fixture();
  const auto r = evaluate_variant(f.model, f.test(), "std-offline");
  EXPECT_EQ(r.label, "std-offline");
  EXPECT_EQ(r.rmse.size(), kTargetCount);
  EXPECT_EQ(r.nrmse.size(), kTargetCount);
  for (double v : r.nrmse) EXPECT_TRUE(std::isfinite(v) && v >= 0.0);
  EXPECT_GT(r.r1, 0.0);
  EXPECT_GT(r.r2, 0.0);
  EXPECT_EQ(r.times, f.data.raw.test.times);
  EXPECT_EQ(r.dbh_observed.size(), f.data.test.rows());
}

TEST(EvaluateVariant, MetricsAreInPhysicalUnits) {
  const auto& f = fixture();
  const auto r = evaluate_variant(f.model, f.test(), "x");
  const Matrix pred = predict(f.model, f.data.test.x);
  const Matrix& obs = f.data.raw.test.y;
  for (std::size_t j = 0; j < kTargetCount; ++j) {
    std::vector<double> p, o;
    for (std::size_t i = 0; i < pred.rows(); ++i) {
      p.push_back(f.data.target_scaler.min[j] + (f.data.target_scaler.max[j] - f.data.target_scaler.min[j]) * pred(i, j));
      o.push_back(obs(i, j));
    }
    EXPECT_NEAR(r.nrmse[j], pgnn::testing::nrmse_loop(p, o), 1e-12) << j;
  }
}

TEST(EvaluateVariant, LambdaZeroEqualsStandardModel) {
  const auto& f = fixture();
  const Mlp m0 = make_mlp({10, 30, 30, 30, 7}, 5);
  auto zero = f.physics;
  zero.lambda = 0.0;
  const TrainingData td{&f.data.train, &f.data.validation};
  const auto a = train(m0, td, LossSpec::mse(f.physics), quick_train(2, 5)).model;
  const auto b = train(m0, td, LossSpec::composite(zero), quick_train(2, 5)).model;
  const auto ra = evaluate_variant(a, f.test(), "v");
  const auto rb = evaluate_variant(b, f.test(), "v");
  EXPECT_EQ(ra.nrmse, rb.nrmse);
  EXPECT_EQ(ra.r1, rb.r1);
  EXPECT_EQ(ra.dbh_predicted, rb.dbh_predicted);
}

TEST(EvaluateVariant, DimensionMismatchRejected) {
  const auto& f = fixture();
  EXPECT_THROW(evaluate_variant(make_mlp({9, 4, 7}, 1), f.test(), "x"), ShapeError);
  EXPECT_THROW(evaluate_variant(make_mlp({10, 4, 6}, 1), f.test(), "x"), ShapeError);
  EXPECT_THROW(evaluate_variant(f.model, EvalSet{}, "x"), ShapeError);
}

TEST(NoiseSweep, LevelZeroIsTheCleanEvaluation) {
  const auto& f = fixture();
  const auto sweep = noise_sweep(f.model, f.test(), {{0.0, 0.5}, 3}, "std-offline");
  ASSERT_EQ(sweep.points.size(), 2u);
  EXPECT_EQ(sweep.points[0].nrmse, evaluate_variant(f.model, f.test(), "").dbh_nrmse());
  EXPECT_EQ(sweep.label, "std-offline");
}

TEST(NoiseSweep, SeededAndDeterministic) {
  const auto& f = fixture();
  const NoiseSweepConfig cfg{{0.0, 0.2, 0.6}, 9};
  const auto a = noise_sweep(f.model, f.test(), cfg);
  const auto b = noise_sweep(f.model, f.test(), cfg);
  for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i].nrmse, b.points[i].nrmse);
  const auto c = noise_sweep(f.model, f.test(), {{0.0, 0.2, 0.6}, 10});
  EXPECT_EQ(a.points[0].nrmse, c.points[0].nrmse);
  EXPECT_NE(a.points[2].nrmse, c.points[2].nrmse);
}

TEST(NoiseSweep, ErrorGrowsWithNoise) {
  const auto& f = fixture();
  const auto sweep = noise_sweep(f.model, f.test(), NoiseSweepConfig{});
  std::vector<double> levels, errors;
  for (const auto& p : sweep.points) {
    levels.push_back(p.level);
    errors.push_back(p.nrmse);
  }
  EXPECT_GT(spearman(levels, errors), 0.0);
  EXPECT_GT(errors.back(), errors.front());
}

TEST(NoiseSweep, LevelsValidated) {
  const auto& f = fixture();
  EXPECT_THROW(noise_sweep(f.model, f.test(), {{}, 0}), ConfigError);
  EXPECT_THROW(noise_sweep(f.model, f.test(), {{0.5, 0.1}, 0}), ConfigError);
  EXPECT_THROW(noise_sweep(f.model, f.test(), {{0.0, 1.5}, 0}), ConfigError);
}

TEST(Compare, NeedsTwoReportsOnOneTestSet) {
  const auto& f = fixture();
  const auto r = evaluate_variant(f.model, f.test(), "a");
  EXPECT_THROW(compare_variants({r}, {}), ConfigError);
  auto other = r;
  other.times.back() += 1;
  EXPECT_THROW(compare_variants({r, other}, {}), DataError);
  NoiseSweep s1{"a", {{0.0, 0.1}, {0.5, 0.2}}}, s2{"b", {{0.0, 0.1}, {0.4, 0.2}}};
  EXPECT_THROW(compare_variants({r, r}, {s1, s2}), DataError);
}

TEST(Compare, WritesStableTables) {
  const auto& f = fixture();
  auto a = evaluate_variant(f.model, f.test(), "std-offline");
  auto b = evaluate_variant(f.model, f.test(), "pgnn-offline");
  const NoiseSweepConfig cfg{{0.0, 0.5, 1.0}, 1};
  const auto c = compare_variants({a, b}, {noise_sweep(f.model, f.test(), cfg, "std-offline"),
                                           noise_sweep(f.model, f.test(), cfg, "pgnn-offline")});
  const auto dir = pgnn::testing::scratch_dir("compare");
  const auto files = write_comparison(dir, c);

  const auto metrics = read_lines(files.metrics);
  ASSERT_EQ(metrics.size(), 3u);
  EXPECT_EQ(metrics[0].rfind("variant,rmse_dBH_dt,", 0), 0u);
  EXPECT_EQ(count_fields(metrics[0]), 1 + 2 * kTargetCount + 3);
  // Identical models: zero difference to the reference row.
  EXPECT_EQ(metrics[2].substr(metrics[2].rfind(',') + 1), "0");

  const auto sweep = read_lines(files.sweep);
  EXPECT_EQ(sweep[0], "variant,level,nrmse_dBH_dt");
  EXPECT_EQ(sweep.size(), 1u + 2 * 3);

  const auto trace = read_lines(files.trace);
  EXPECT_EQ(trace[0], "timestamp,observed,std-offline,pgnn-offline");
  EXPECT_EQ(trace.size(), 1 + f.data.test.rows());
  EXPECT_EQ(trace[1].substr(0, 20), format_timestamp(f.data.raw.test.times[0]));
}

TEST(Labels, EightVariants) {
  EXPECT_EQ(variant_labels().size(), 8u);
  EXPECT_EQ(variant_labels()[6], "pgnn+pg-neuron");
}
