#include <gtest/gtest.h>

#include <sstream>

#include "pgnn/pgnn.hpp"
#include "support/fixtures.hpp"

using namespace pgnn;

TEST(Synth, SameSeedSameSeries) {
  SynthConfig c;
  c.n_minutes = 2000;
  c.gap_fraction = 0.03;
  EXPECT_EQ(generate(c), generate(c));
  SynthConfig d = c;
  d.seed = 2;
  EXPECT_NE(generate(c), generate(d));
}

TEST(Synth, GapsDoNotChangeTheUnderlyingSeries) {
  SynthConfig c;
  c.n_minutes = 1000;
  const auto clean = generate(c);
  c.gap_fraction = 0.1;
  const auto gappy = generate(c);
  for (std::size_t ch = 0; ch < kChannelCount; ++ch)
    for (std::size_t t = 0; t < clean.size(); ++t)
      if (!gappy.gaps[ch][t]) ASSERT_EQ(gappy.values[ch][t], clean.values[ch][t]);
}

TEST(Synth, NoiselessTargetsCarryTheCoupling) {
  SynthConfig c;
  c.n_minutes = 3000;
  const auto set = derive_targets(generate(c.noiseless()));
  const TargetLayout L;
  for (std::size_t r = 0; r < set.rows(); ++r)
    ASSERT_EQ(set.y(r, L.dphi_dt), newell_coupling(set.y(r, L.v), set.y(r, L.bz_imf), set.y(r, L.theta)));
}

TEST(Synth, TrueTargetsSatisfyBothIdentities) {
  for (bool noisy : {false, true}) {
    SynthConfig c;
    c.n_minutes = 5000;
    const auto set = derive_targets(generate(noisy ? c : c.noiseless()));
    const CompositeLossConfig phys;  // physical units
    EXPECT_LT(residual_r1(set.y, set.segments(), phys), 1e-9);
    EXPECT_LT(residual_r2(set.y, phys), 1e-9);
  }
}

TEST(Synth, ChannelsAreAutocorrelated) {
  SynthConfig c;
  c.n_minutes = 5000;
  const auto s = generate(c.noiseless());
  for (std::size_t ch : {std::size_t{By_imf}, std::size_t{Bz_imf}, std::size_t{V}, std::size_t{B_N}}) {
    const auto& v = s.values[ch];
    const std::span<const double> a(v.data(), v.size() - 1), b(v.data() + 1, v.size() - 1);
    EXPECT_GT(pearson(a, b), 0.9) << kChannelNames[ch];
  }
}

TEST(Synth, GroundFieldRespondsToCoupling) {
  // Southward IMF drives B_N down: the step change correlates negatively with
  // the coupling of the previous minute.
  SynthConfig c;
  c.n_minutes = 20000;
  c.decay = 0.0;
  const auto s = generate(c.noiseless());
  std::vector<double> drive, step;
  for (std::size_t t = 0; t + 1 < s.size(); ++t) {
    drive.push_back(newell_coupling(s.values[V][t], s.values[Bz_imf][t],
                                    clock_angle(s.values[By_imf][t], s.values[Bz_imf][t])));
    step.push_back(s.values[B_N][t + 1] - s.values[B_N][t]);
  }
  EXPECT_LT(pearson(drive, step), -0.5);
}

TEST(Synth, InterpolationErrorIsBoundedByStepSize) {
  // Between known neighbours p < t < q a linear fill can be off by at most
  // 2 * min(t - p, q - t) * (largest per-minute step of the channel).
  SynthConfig c;
  c.n_minutes = 4000;
  const auto truth = generate(c.noiseless());
  SynthConfig g = c.noiseless();
  g.gap_fraction = 0.05;
  const auto gappy = generate(g);
  const auto filled = interpolate_gaps(gappy);
  ASSERT_EQ(filled.size(), truth.size());  // first and last rows are never gaps
  std::size_t checked = 0;
  for (std::size_t ch = 0; ch < kChannelCount; ++ch) {
    double max_step = 0.0;
    for (std::size_t t = 0; t + 1 < truth.size(); ++t)
      max_step = std::max(max_step, std::abs(truth.values[ch][t + 1] - truth.values[ch][t]));
    for (std::size_t t = 0; t < truth.size(); ++t) {
      if (!gappy.gaps[ch][t]) continue;
      std::size_t p = t, q = t;
      while (gappy.gaps[ch][p]) --p;
      while (gappy.gaps[ch][q]) ++q;
      const double bound = 2.0 * static_cast<double>(std::min(t - p, q - t)) * max_step;
      EXPECT_LE(std::abs(filled.values[ch][t] - truth.values[ch][t]), bound * (1 + 1e-12))
          << kChannelNames[ch] << " @" << t;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 2000u);
}

TEST(Synth, RejectsInvalidConfig) {
  SynthConfig c;
  c.n_minutes = 99;
  EXPECT_THROW(generate(c), ConfigError);
  c = {};
  c.noise[3] = -0.1;
  EXPECT_THROW(generate(c), ConfigError);
  c = {};
  c.gap_fraction = 1.0;
  EXPECT_THROW(generate(c), ConfigError);
  c = {};
  c.decay = 1.0;
  EXPECT_THROW(generate(c), ConfigError);
}

TEST(Synth, StandardNetworkBeatsTheMeanPredictor) {
  // Default config, 50 epochs.
  const auto d = prepare(derive_targets(generate(SynthConfig{})));
  const auto phys = physics_config(d.target_scaler, 0.0);
  TrainConfig cfg;
  cfg.epochs = 50;
  const auto model =
      train(make_mlp({10, 30, 30, 30, 7}, 1), {&d.train, &d.validation}, LossSpec::mse(phys), cfg).model;
  const double nn = dbh_nrmse(model, EvalSet::test_of(d, phys));

  const TargetLayout L;
  const auto train_dbh = d.raw.train.y.column(L.dbh_dt);
  const double mean = std::accumulate(train_dbh.begin(), train_dbh.end(), 0.0) / static_cast<double>(train_dbh.size());
  const auto obs = d.raw.test.y.column(L.dbh_dt);
  const std::vector<double> flat(obs.size(), mean);
  const double baseline = nrmse(flat, obs);
  EXPECT_LT(nn, baseline);
  RecordProperty("nn_nrmse", std::to_string(nn));
  RecordProperty("mean_nrmse", std::to_string(baseline));
}
