#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "pgnn/dataset.hpp"
#include "pgnn/error.hpp"
#include "pgnn/metrics.hpp"
#include "pgnn/mlp.hpp"
#include "pgnn/physics.hpp"

namespace pgnn {

// The labels used by the comparison tables.
inline const std::vector<std::string>& variant_labels() {
  static const std::vector<std::string> labels = {
      "std-offline",     "pgnn-offline",    "std+std-neuron", "std+std-weight",
      "pgnn+std-neuron", "pgnn+std-weight", "pgnn+pg-neuron", "pgnn+pg-weight"};
  return labels;
}

// A held-out set in both network units and physical units.
struct EvalSet {
  const SupervisedSet* scaled = nullptr;
  const SupervisedSet* raw = nullptr;
  const MinMaxScaler* target_scaler = nullptr;
  CompositeLossConfig physics;

  static EvalSet test_of(const PreparedData& p, CompositeLossConfig physics) {
    return {&p.test, &p.raw.test, &p.target_scaler, std::move(physics)};
  }
  static EvalSet validation_of(const PreparedData& p, CompositeLossConfig physics) {
    return {&p.validation, &p.raw.validation, &p.target_scaler, std::move(physics)};
  }
};

struct MetricsReport {
  std::string label;
  std::vector<double> rmse;   // per target, physical units
  std::vector<double> nrmse;  // per target
  double r1 = 0.0;
  double r2 = 0.0;
  std::vector<std::int64_t> times;
  std::vector<double> dbh_observed;
  std::vector<double> dbh_predicted;

  double dbh_nrmse(const TargetLayout& layout = {}) const { return nrmse[layout.dbh_dt]; }
};

namespace detail {

inline void check_eval_set(const Mlp& model, const EvalSet& set) {
  if (!set.scaled || !set.raw || !set.target_scaler) throw ShapeError("incomplete evaluation set");
  if (set.scaled->x.cols() != model.input_dim() || set.raw->y.cols() != model.output_dim())
    throw ShapeError("model does not match the evaluation set dimensions");
  if (set.scaled->rows() != set.raw->rows()) throw ShapeError("scaled and raw sets differ in size");
}

inline MetricsReport report_from_prediction(const Matrix& pred_scaled, const EvalSet& set,
                                            std::string label) {
  const Matrix pred = set.target_scaler->invert(pred_scaled);
  const Matrix& obs = set.raw->y;
  const auto& L = set.physics.layout;
  MetricsReport r;
  r.label = std::move(label);
  for (std::size_t j = 0; j < obs.cols(); ++j) {
    const auto p = pred.column(j);
    const auto o = obs.column(j);
    r.rmse.push_back(rmse(p, o));
    r.nrmse.push_back(nrmse(p, o));
  }
  const auto segs = set.scaled->segments();
  r.r1 = residual_r1(pred_scaled, segs, set.physics);
  r.r2 = residual_r2(pred_scaled, set.physics);
  r.times = set.raw->times;
  r.dbh_observed = obs.column(L.dbh_dt);
  r.dbh_predicted = pred.column(L.dbh_dt);
  return r;
}

}  // namespace detail

// Metrics in physical units after inverse scaling; residuals in the units of
// the physics config.
inline MetricsReport evaluate_variant(const Mlp& model, const EvalSet& set, std::string label) {
  detail::check_eval_set(model, set);
  return detail::report_from_prediction(predict(model, set.scaled->x), set, std::move(label));
}

inline double dbh_nrmse(const Mlp& model, const EvalSet& set) {
  return evaluate_variant(model, set, "").dbh_nrmse(set.physics.layout);
}

struct NoiseSweepConfig {
  std::vector<double> levels = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::uint64_t seed = 0;

  void validate() const {
    if (levels.empty()) throw ConfigError("noise sweep needs at least one level");
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (!(levels[i] >= 0.0 && levels[i] <= 1.0)) throw ConfigError("noise levels must lie in [0, 1]");
      if (i > 0 && levels[i] < levels[i - 1]) throw ConfigError("noise levels must be sorted");
    }
  }
};

struct NoisePoint {
  double level = 0.0;
  double nrmse = 0.0;  // dBH/dt channel
};

struct NoiseSweep {
  std::string label;
  std::vector<NoisePoint> points;
};

// Adds N(0, (level * sd_c)^2) to each scaled feature column c, where sd_c is
// the population standard deviation of that column over the set. Each level
// draws from its own generator seeded by (seed, level index).
inline NoiseSweep noise_sweep(const Mlp& model, const EvalSet& set, const NoiseSweepConfig& cfg,
                              std::string label = {}) {
  cfg.validate();
  detail::check_eval_set(model, set);
  const Matrix& x = set.scaled->x;
  std::vector<double> sd(x.cols(), 0.0);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) mean += x(r, c);
    mean /= static_cast<double>(x.rows());
    double var = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) var += (x(r, c) - mean) * (x(r, c) - mean);
    sd[c] = std::sqrt(var / static_cast<double>(x.rows()));
  }
  NoiseSweep out{std::move(label), {}};
  for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
    const double level = cfg.levels[li];
    Matrix noisy = x;
    if (level > 0.0) {
      std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                        static_cast<std::uint32_t>(li)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (std::size_t r = 0; r < noisy.rows(); ++r)
        for (std::size_t c = 0; c < noisy.cols(); ++c) noisy(r, c) += level * sd[c] * normal(rng);
    }
    const auto rep = detail::report_from_prediction(predict(model, noisy), set, "");
    out.points.push_back({level, rep.dbh_nrmse(set.physics.layout)});
  }
  return out;
}

struct Comparison {
  std::vector<MetricsReport> reports;
  std::vector<NoiseSweep> sweeps;
};

inline Comparison compare_variants(std::vector<MetricsReport> reports, std::vector<NoiseSweep> sweeps) {
  if (reports.size() < 2) throw ConfigError("a comparison needs at least two reports");
  for (const auto& r : reports)
    if (r.times != reports.front().times || r.dbh_observed != reports.front().dbh_observed)
      throw DataError("variant '" + r.label + "' was evaluated on a different test set");
  for (const auto& s : sweeps) {
    if (s.points.size() != sweeps.front().points.size())
      throw DataError("noise sweeps use different level grids");
    for (std::size_t i = 0; i < s.points.size(); ++i)
      if (s.points[i].level != sweeps.front().points[i].level)
        throw DataError("noise sweeps use different level grids");
  }
  return {std::move(reports), std::move(sweeps)};
}

// ---------------------------------------------------------------------------
// CSV layouts (stable, consumed by external plotting):
//   metrics: variant, rmse_<target>..., nrmse_<target>..., r1, r2,
//            delta_nrmse_dBH_dt (relative to the first variant)
//   sweep:   variant, level, nrmse_dBH_dt
//   trace:   timestamp, observed, <one predicted column per variant>

inline void write_metrics_csv(const std::filesystem::path& path,
                              const std::vector<MetricsReport>& reports,
                              const TargetLayout& layout = {}) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << "variant";
  for (std::size_t j = 0; j < kTargetCount; ++j) f << ",rmse_" << layout.name_of(j);
  for (std::size_t j = 0; j < kTargetCount; ++j) f << ",nrmse_" << layout.name_of(j);
  f << ",r1,r2,delta_nrmse_dBH_dt\n";
  const double ref = reports.empty() ? 0.0 : reports.front().dbh_nrmse(layout);
  for (const auto& r : reports) {
    f << r.label;
    for (double v : r.rmse) f << ',' << detail::format_double(v);
    for (double v : r.nrmse) f << ',' << detail::format_double(v);
    f << ',' << detail::format_double(r.r1) << ',' << detail::format_double(r.r2) << ','
      << detail::format_double(r.dbh_nrmse(layout) - ref) << '\n';
  }
}

inline void write_sweep_csv(const std::filesystem::path& path, const std::vector<NoiseSweep>& sweeps) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << "variant,level,nrmse_dBH_dt\n";
  for (const auto& s : sweeps)
    for (const auto& p : s.points)
      f << s.label << ',' << detail::format_double(p.level) << ',' << detail::format_double(p.nrmse)
        << '\n';
}

inline void write_trace_csv(const std::filesystem::path& path,
                            const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw ConfigError("trace table needs at least one report");
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << "timestamp,observed";
  for (const auto& r : reports) f << ',' << r.label;
  f << '\n';
  const auto& first = reports.front();
  for (std::size_t i = 0; i < first.times.size(); ++i) {
    f << format_timestamp(first.times[i]) << ',' << detail::format_double(first.dbh_observed[i]);
    for (const auto& r : reports) f << ',' << detail::format_double(r.dbh_predicted[i]);
    f << '\n';
  }
}

struct ComparisonFiles {
  std::filesystem::path metrics, sweep, trace;
};

inline ComparisonFiles write_comparison(const std::filesystem::path& dir, const Comparison& c,
                                        const TargetLayout& layout = {}) {
  std::filesystem::create_directories(dir);
  ComparisonFiles files{dir / "metrics.csv", dir / "sweep.csv", dir / "trace.csv"};
  write_metrics_csv(files.metrics, c.reports, layout);
  write_sweep_csv(files.sweep, c.sweeps);
  write_trace_csv(files.trace, c.reports);
  return files;
}

}  // namespace pgnn
