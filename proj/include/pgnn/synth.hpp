#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "pgnn/dataset.hpp"
#include "pgnn/error.hpp"
#include "pgnn/physics.hpp"

namespace pgnn {

// Synthetic minute-cadence solar wind and ground field. Solar-wind channels
// are Ornstein-Uhlenbeck processes; the ground field relaxes towards zero and
// is driven each minute by the coupling function of the previous minute:
//
//   B_N(t+1) = B_N(t) - decay * B_N(t) - gain * c(t)                + q e
//   B_E(t+1) = B_E(t) - decay * B_E(t) + gain * c(t) * east * sin(theta) + q e
//
// with c(t) = newell_coupling(V, Bz_imf, theta) at t. Observation noise is
// added to the observed channels afterwards.
struct SynthConfig {
  std::size_t n_minutes = 50000;
  std::uint64_t seed = 1;
  std::int64_t start_minute = 23797440;  // 2015-04-01T00:00Z

  double mean_v = 450.0;       // km/s
  double sd_v = 70.0;
  double imf_sd = 4.0;         // nT, each IMF component
  double corr_minutes = 60.0;  // autocorrelation length of IMF and plasma
  double mean_rho = 5.0;       // cm^-3
  double mean_t = 1.0e5;       // K

  double coupling_gain = 2.0e-4;  // nT/min per coupling unit
  double east_share = 0.6;
  double decay = 0.02;            // per minute
  double process_noise = 0.05;    // nT per minute on the ground field

  // Per-channel observation noise sigma in channel units.
  std::array<double, kChannelCount> noise = {0.05, 0.05, 0.05, 0.1, 0.1, 0.1, 0.0, 0.0, 1.0, 0.0};

  double gap_fraction = 0.0;  // fraction of cells flagged missing

  void validate() const {
    if (n_minutes < 100) throw ConfigError("synthetic series needs at least 100 minutes");
    for (double s : noise)
      if (!(s >= 0.0)) throw ConfigError("observation noise must be >= 0");
    if (!(gap_fraction >= 0.0 && gap_fraction < 1.0)) throw ConfigError("gap fraction must lie in [0, 1)");
    if (!(corr_minutes >= 1.0)) throw ConfigError("correlation length must be >= 1 minute");
    if (!(decay >= 0.0 && decay < 1.0)) throw ConfigError("decay must lie in [0, 1)");
  }

  SynthConfig noiseless() const {
    SynthConfig c = *this;
    c.noise.fill(0.0);
    return c;
  }
};

namespace detail {

class OrnsteinUhlenbeck {
 public:
  OrnsteinUhlenbeck(double mean, double sd, double tau, double start)
      : mean_(mean), kick_(sd * std::sqrt(2.0 / tau)), tau_(tau), x_(start) {}

  double next(std::mt19937_64& rng, std::normal_distribution<double>& normal) {
    x_ += (mean_ - x_) / tau_ + kick_ * normal(rng);
    return x_;
  }
  double value() const { return x_; }

 private:
  double mean_, kick_, tau_, x_;
};

}  // namespace detail

inline RawSeries generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_minutes;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const double tau = cfg.corr_minutes;
  detail::OrnsteinUhlenbeck v(cfg.mean_v, cfg.sd_v, 3.0 * tau, cfg.mean_v);
  detail::OrnsteinUhlenbeck bx(0.0, cfg.imf_sd, tau, 0.0);
  detail::OrnsteinUhlenbeck by(0.0, cfg.imf_sd, tau, 0.0);
  detail::OrnsteinUhlenbeck bz(0.0, cfg.imf_sd, tau, 0.0);
  detail::OrnsteinUhlenbeck log_rho(std::log(cfg.mean_rho), 0.4, 4.0 * tau, std::log(cfg.mean_rho));
  detail::OrnsteinUhlenbeck log_t(std::log(cfg.mean_t), 0.5, 4.0 * tau, std::log(cfg.mean_t));

  RawSeries s;
  s.segment_starts.push_back(0);
  s.minutes.resize(n);
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    s.values[c].assign(n, 0.0);
    s.gaps[c].assign(n, 0);
  }

  double bn = 0.0, be = 0.0, bzg = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    s.minutes[t] = cfg.start_minute + static_cast<std::int64_t>(t);
    const double vt = std::max(250.0, v.next(rng, normal));
    const double byt = by.next(rng, normal);
    const double bzt = bz.next(rng, normal);
    const double rho = std::exp(log_rho.next(rng, normal));
    s.values[B_N][t] = bn;
    s.values[B_E][t] = be;
    s.values[Bz_geo][t] = bzg;
    s.values[Bx_imf][t] = bx.next(rng, normal);
    s.values[By_imf][t] = byt;
    s.values[Bz_imf][t] = bzt;
    s.values[T][t] = std::exp(log_t.next(rng, normal));
    s.values[Rho][t] = rho;
    s.values[V][t] = vt;
    s.values[P][t] = 1.6726e-6 * rho * vt * vt;

    const double theta = clock_angle(byt, bzt);
    const double drive = cfg.coupling_gain * newell_coupling(vt, bzt, theta);
    bn += -cfg.decay * bn - drive + cfg.process_noise * normal(rng);
    be += -cfg.decay * be + drive * cfg.east_share * std::sin(theta) + cfg.process_noise * normal(rng);
    bzg += -cfg.decay * bzg + 0.3 * drive + cfg.process_noise * normal(rng);
  }

  for (std::size_t c = 0; c < kChannelCount; ++c) {
    if (cfg.noise[c] == 0.0) continue;
    for (std::size_t t = 0; t < n; ++t) s.values[c][t] += cfg.noise[c] * normal(rng);
  }

  if (cfg.gap_fraction > 0.0) {
    // Exact count of gap cells on interior rows, from an independent stream so
    // the underlying series does not depend on the gap fraction.
    std::mt19937_64 gap_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    const std::size_t cells = (n - 2) * kChannelCount;
    const auto count = static_cast<std::size_t>(
        std::llround(cfg.gap_fraction * static_cast<double>(n * kChannelCount)));
    std::vector<std::size_t> idx(cells);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), gap_rng);
    for (std::size_t k = 0; k < std::min(count, cells); ++k) {
      const std::size_t t = 1 + idx[k] / kChannelCount;
      const std::size_t c = idx[k] % kChannelCount;
      s.gaps[c][t] = 1;
      s.values[c][t] = 0.0;
    }
  }
  return s;
}

}  // namespace pgnn
