#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pgnn/error.hpp"
#include "pgnn/matrix.hpp"
#include "pgnn/mlp.hpp"

namespace pgnn {

inline constexpr std::size_t kTargetCount = 7;

// Output column of each physical quantity the network predicts.
struct TargetLayout {
  std::size_t dbh_dt = 0;
  std::size_t b_n = 1;
  std::size_t b_e = 2;
  std::size_t dphi_dt = 3;
  std::size_t v = 4;
  std::size_t bz_imf = 5;
  std::size_t theta = 6;

  std::array<std::size_t, kTargetCount> indices() const {
    return {dbh_dt, b_n, b_e, dphi_dt, v, bz_imf, theta};
  }

  static constexpr std::array<const char*, kTargetCount> names() {
    return {"dBH_dt", "B_N", "B_E", "dPhi_dt", "V", "Bz_imf", "theta"};
  }

  // Column name for output slot `column`.
  std::string name_of(std::size_t column) const {
    auto idx = indices();
    for (std::size_t i = 0; i < kTargetCount; ++i)
      if (idx[i] == column) return names()[i];
    throw ShapeError("no target bound to column " + std::to_string(column));
  }

  void validate() const {
    auto idx = indices();
    std::set<std::size_t> seen(idx.begin(), idx.end());
    if (seen.size() != kTargetCount) throw ConfigError("target layout indices must be distinct");
    for (auto i : idx)
      if (i >= kTargetCount) throw ConfigError("target layout index out of range");
  }

  friend bool operator==(const TargetLayout&, const TargetLayout&) = default;
};

// Affine map from network output to physical units: phys = offset + scale * y.
struct TargetScaling {
  std::vector<double> offset = std::vector<double>(kTargetCount, 0.0);
  std::vector<double> scale = std::vector<double>(kTargetCount, 1.0);

  double to_physical(std::size_t j, double y) const { return offset[j] + scale[j] * y; }
};

// How per-row physics residuals are reduced over a batch.
enum class ResidualNorm { MeanAbsolute, MeanSquare };

struct CompositeLossConfig {
  double lambda = 0.0;
  ResidualNorm norm = ResidualNorm::MeanAbsolute;
  TargetLayout layout;
  double dt_minutes = 1.0;
  TargetScaling scaling;
  // Each residual is divided by its normaliser before the absolute value;
  // 1.0 keeps it in raw physical units.
  double r1_norm = 1.0;
  double r2_norm = 1.0;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
    if (!(dt_minutes > 0.0)) throw ConfigError("dt_minutes must be positive");
    if (!(r1_norm > 0.0) || !(r2_norm > 0.0)) throw ConfigError("residual norms must be positive");
    if (scaling.offset.size() != kTargetCount || scaling.scale.size() != kTargetCount)
      throw ConfigError("target scaling must cover all outputs");
    layout.validate();
  }
};

struct LossBreakdown {
  double l_data = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double total = 0.0;
};

// Half-open row range of consecutive timesteps inside a prediction matrix.
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const RowRange&, const RowRange&) = default;
};

// IMF clock angle from +Z towards +Y, in (-pi, pi]. Zero field gives 0.
inline double clock_angle(double by, double bz) {
  if (by == 0.0 && bz == 0.0) return 0.0;
  double a = std::atan2(by, bz);
  return a == -std::numbers::pi ? std::numbers::pi : a;
}

namespace detail {

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline double penalty(ResidualNorm n, double r) { return n == ResidualNorm::MeanAbsolute ? std::abs(r) : r * r; }

// d penalty / d r; 0 at the kink of |r|.
inline double penalty_slope(ResidualNorm n, double r) {
  return n == ResidualNorm::MeanAbsolute ? sgn(r) : 2.0 * r;
}

struct NewellEval {
  double value = 0.0;
  double d_v = 0.0;
  double d_bz = 0.0;
  double d_theta = 0.0;
};

// V^(4/3) |Bz|^(2/3) |sin(theta/2)|^(8/3) with partials. Negative V is
// clamped to 0; the derivative at every kink (V = 0, Bz = 0, sin = 0) is 0.
inline NewellEval newell_eval(double v, double bz, double theta) {
  NewellEval e;
  const double vp = v > 0.0 ? v : 0.0;
  const double abz = std::abs(bz);
  const double s = std::sin(0.5 * theta);
  const double as = std::abs(s);
  const double fv = std::cbrt(vp) * vp;            // V^(4/3)
  const double fb = std::cbrt(abz * abz);          // |Bz|^(2/3)
  const double fs = std::pow(as, 8.0 / 3.0);       // |sin|^(8/3)
  e.value = fv * fb * fs;
  if (vp > 0.0) e.d_v = (4.0 / 3.0) * std::cbrt(vp) * fb * fs;
  if (abz > 0.0) e.d_bz = fv * (2.0 / 3.0) / std::cbrt(abz) * sgn(bz) * fs;
  if (as > 0.0) e.d_theta = fv * fb * (8.0 / 3.0) * std::pow(as, 5.0 / 3.0) * sgn(s) * 0.5 *
                            std::cos(0.5 * theta);
  return e;
}

inline void check_windows(const Matrix& pred, std::span<const RowRange> windows) {
  for (const auto& w : windows)
    if (w.begin > w.end || w.end > pred.rows()) throw ShapeError("window outside prediction rows");
}

inline std::size_t pair_count(std::span<const RowRange> windows) {
  std::size_t p = 0;
  for (const auto& w : windows) p += w.size() >= 2 ? w.size() - 1 : 0;
  return p;
}

}  // namespace detail

// Reconnection-rate coupling V^(4/3) |Bz|^(2/3) sin^(8/3)(theta/2). |Bz| keeps
// the fractional power real for southward IMF; the sine is taken in absolute
// value so that theta and -theta couple equally.
inline double newell_coupling(double v, double bz, double theta) {
  if (v < 0.0) throw DataError("newell_coupling: negative solar wind speed");
  return detail::newell_eval(v, bz, theta).value;
}

// Mean absolute violation of dBH^2 = dBN^2 + dBE^2 over consecutive pairs.
// dBN/dt and dBE/dt are forward differences of the predicted levels; dBH/dt
// is the direct prediction at the later row of each pair.
inline double residual_r1(const Matrix& pred, std::span<const RowRange> windows,
                          const CompositeLossConfig& cfg) {
  detail::check_windows(pred, windows);
  const auto& L = cfg.layout;
  const auto& s = cfg.scaling;
  const std::size_t pairs = detail::pair_count(windows);
  if (pairs == 0) return 0.0;
  double acc = 0.0;
  for (const auto& w : windows) {
    for (std::size_t i = w.begin; i + 1 < w.end; ++i) {
      const double h = s.to_physical(L.dbh_dt, pred(i + 1, L.dbh_dt));
      const double dn =
          (s.to_physical(L.b_n, pred(i + 1, L.b_n)) - s.to_physical(L.b_n, pred(i, L.b_n))) /
          cfg.dt_minutes;
      const double de =
          (s.to_physical(L.b_e, pred(i + 1, L.b_e)) - s.to_physical(L.b_e, pred(i, L.b_e))) /
          cfg.dt_minutes;
      acc += detail::penalty(cfg.norm, (h * h - dn * dn - de * de) / cfg.r1_norm);
    }
  }
  return acc / static_cast<double>(pairs);
}

// Single contiguous window in physical units.
inline double residual_r1(const Matrix& window, const TargetLayout& layout, double dt_minutes) {
  if (window.rows() < 2) throw ShapeError("residual_r1 needs at least 2 consecutive rows");
  CompositeLossConfig cfg;
  cfg.layout = layout;
  cfg.dt_minutes = dt_minutes;
  RowRange all{0, window.rows()};
  return residual_r1(window, std::span<const RowRange>(&all, 1), cfg);
}

// Mean absolute mismatch between the predicted reconnection rate and the
// coupling function evaluated on the predicted V, Bz and clock angle.
inline double residual_r2(const Matrix& pred, const CompositeLossConfig& cfg) {
  if (pred.rows() == 0) throw ShapeError("residual_r2 needs a nonempty batch");
  if (pred.cols() != kTargetCount) throw ShapeError("residual_r2 expects 7 output columns");
  const auto& L = cfg.layout;
  const auto& s = cfg.scaling;
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    const double phi = s.to_physical(L.dphi_dt, pred(i, L.dphi_dt));
    const double n = detail::newell_eval(s.to_physical(L.v, pred(i, L.v)),
                                         s.to_physical(L.bz_imf, pred(i, L.bz_imf)),
                                         s.to_physical(L.theta, pred(i, L.theta)))
                         .value;
    acc += detail::penalty(cfg.norm, (phi - n) / cfg.r2_norm);
  }
  return acc / static_cast<double>(pred.rows());
}

inline double residual_r2(const Matrix& pred, const TargetLayout& layout) {
  CompositeLossConfig cfg;
  cfg.layout = layout;
  return residual_r2(pred, cfg);
}

// (1/K) sum_j (1/N) sum_i (Y_ij - Yhat_ij)^2
inline double l_data(const Matrix& pred, const Matrix& obs) {
  require_same_shape(pred, obs, "l_data");
  if (pred.empty()) throw ShapeError("l_data: empty input");
  const std::size_t n = pred.rows(), k = pred.cols();
  double outer = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double inner = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = obs(i, j) - pred(i, j);
      inner += d * d;
    }
    outer += inner / static_cast<double>(n);
  }
  return outer / static_cast<double>(k);
}

inline LossBreakdown composite_loss(const Matrix& pred, std::span<const RowRange> windows,
                                    const Matrix& obs, const CompositeLossConfig& cfg) {
  cfg.validate();
  LossBreakdown b;
  b.l_data = l_data(pred, obs);
  b.r1 = residual_r1(pred, windows, cfg);
  b.r2 = residual_r2(pred, cfg);
  b.total = cfg.lambda == 0.0 ? b.l_data : b.l_data + cfg.lambda * (b.r1 + b.r2);
  return b;
}

// d(R1 + R2)/dYhat, using subgradient 0 at every absolute-value kink.
inline Matrix physics_loss_grad(const Matrix& pred, std::span<const RowRange> windows,
                                const CompositeLossConfig& cfg) {
  detail::check_windows(pred, windows);
  if (pred.cols() != kTargetCount) throw ShapeError("physics loss expects 7 output columns");
  if (pred.rows() == 0) throw ShapeError("physics loss needs a nonempty batch");
  const auto& L = cfg.layout;
  const auto& s = cfg.scaling;
  Matrix g(pred.rows(), pred.cols());

  const std::size_t pairs = detail::pair_count(windows);
  if (pairs > 0) {
    const double w1 = 1.0 / (static_cast<double>(pairs) * cfg.r1_norm);
    for (const auto& w : windows) {
      for (std::size_t i = w.begin; i + 1 < w.end; ++i) {
        const double h = s.to_physical(L.dbh_dt, pred(i + 1, L.dbh_dt));
        const double dn =
            (s.to_physical(L.b_n, pred(i + 1, L.b_n)) - s.to_physical(L.b_n, pred(i, L.b_n))) /
            cfg.dt_minutes;
        const double de =
            (s.to_physical(L.b_e, pred(i + 1, L.b_e)) - s.to_physical(L.b_e, pred(i, L.b_e))) /
            cfg.dt_minutes;
        const double slope = detail::penalty_slope(cfg.norm, (h * h - dn * dn - de * de) / cfg.r1_norm);
        if (slope == 0.0) continue;
        const double c = slope * w1;
        g(i + 1, L.dbh_dt) += c * 2.0 * h * s.scale[L.dbh_dt];
        const double gn = c * -2.0 * dn / cfg.dt_minutes * s.scale[L.b_n];
        g(i + 1, L.b_n) += gn;
        g(i, L.b_n) -= gn;
        const double ge = c * -2.0 * de / cfg.dt_minutes * s.scale[L.b_e];
        g(i + 1, L.b_e) += ge;
        g(i, L.b_e) -= ge;
      }
    }
  }

  const double w2 = 1.0 / (static_cast<double>(pred.rows()) * cfg.r2_norm);
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    const double phi = s.to_physical(L.dphi_dt, pred(i, L.dphi_dt));
    const auto e = detail::newell_eval(s.to_physical(L.v, pred(i, L.v)),
                                       s.to_physical(L.bz_imf, pred(i, L.bz_imf)),
                                       s.to_physical(L.theta, pred(i, L.theta)));
    const double slope = detail::penalty_slope(cfg.norm, (phi - e.value) / cfg.r2_norm);
    if (slope == 0.0) continue;
    const double c = slope * w2;
    g(i, L.dphi_dt) += c * s.scale[L.dphi_dt];
    g(i, L.v) -= c * e.d_v * s.scale[L.v];
    g(i, L.bz_imf) -= c * e.d_bz * s.scale[L.bz_imf];
    g(i, L.theta) -= c * e.d_theta * s.scale[L.theta];
  }
  return g;
}

// d(total)/dYhat for the composite objective.
inline Matrix composite_loss_grad(const Matrix& pred, std::span<const RowRange> windows,
                                  const Matrix& obs, const CompositeLossConfig& cfg) {
  cfg.validate();
  Matrix g = mse_grad(pred, obs);
  if (cfg.lambda == 0.0) return g;
  Matrix p = physics_loss_grad(pred, windows, cfg);
  auto gv = g.values();
  auto pv = p.values();
  for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += cfg.lambda * pv[i];
  return g;
}

}  // namespace pgnn
