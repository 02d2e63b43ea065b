#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "pgnn/dataset.hpp"
#include "pgnn/error.hpp"
#include "pgnn/mlp.hpp"
#include "pgnn/optim.hpp"
#include "pgnn/physics.hpp"

namespace pgnn {

enum class Objective { Mse, Composite };
enum class Optimizer { Adam, Sgd };

// Training objective. `physics` carries the target layout and physical
// scaling even for the Mse objective, so residuals can be logged.
struct LossSpec {
  Objective objective = Objective::Mse;
  CompositeLossConfig physics;

  static LossSpec mse(CompositeLossConfig physics = {}) {
    physics.lambda = 0.0;
    return {Objective::Mse, std::move(physics)};
  }
  static LossSpec composite(CompositeLossConfig physics) {
    return {Objective::Composite, std::move(physics)};
  }

  double lambda() const { return objective == Objective::Mse ? 0.0 : physics.lambda; }
};

// Physics config with residuals expressed in physical units and divided by
// the squared dBH/dt range (R1) and the dPhi/dt range (R2) of the training
// targets.
inline CompositeLossConfig physics_config(const MinMaxScaler& target_scaler, double lambda,
                                          const TargetLayout& layout = {}, double dt_minutes = 1.0) {
  CompositeLossConfig cfg;
  cfg.lambda = lambda;
  cfg.layout = layout;
  cfg.dt_minutes = dt_minutes;
  cfg.scaling = target_scaler.as_target_scaling();
  const double rh = target_scaler.range(layout.dbh_dt) / dt_minutes;
  const double rp = target_scaler.range(layout.dphi_dt);
  cfg.r1_norm = rh > 0.0 ? rh * rh : 1.0;
  cfg.r2_norm = rp > 0.0 ? rp : 1.0;
  cfg.validate();
  return cfg;
}

inline LossBreakdown evaluate_loss(const Matrix& pred, std::span<const RowRange> windows,
                                   const Matrix& obs, const LossSpec& loss) {
  if (loss.objective == Objective::Composite) return composite_loss(pred, windows, obs, loss.physics);
  // Same reduction as the composite data term, so lambda = 0 logs identically.
  LossBreakdown b;
  b.l_data = l_data(pred, obs);
  b.r1 = residual_r1(pred, windows, loss.physics);
  b.r2 = residual_r2(pred, loss.physics);
  b.total = b.l_data;
  return b;
}

inline Matrix loss_gradient(const Matrix& pred, std::span<const RowRange> windows,
                            const Matrix& obs, const LossSpec& loss) {
  if (loss.objective == Objective::Composite)
    return composite_loss_grad(pred, windows, obs, loss.physics);
  return mse_grad(pred, obs);
}

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::optional<double> loss_threshold;
  Optimizer optimizer = Optimizer::Adam;

  void validate(const LossSpec& loss) const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be >= 1");
    if (loss.lambda() > 0.0 && batch_size < 2)
      throw ConfigError("batch size must be >= 2 when the physics residuals are active");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown train;
  LossBreakdown validation;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  bool stopped_early = false;
};

// Training data already in network units (scaled features and targets).
struct TrainingData {
  const SupervisedSet* train = nullptr;
  const SupervisedSet* validation = nullptr;
};

// Contiguous minibatches that never cross a segment boundary. A trailing
// single row is folded into the previous window of its segment.
inline std::vector<RowRange> make_windows(std::span<const RowRange> segments,
                                          std::size_t batch_size) {
  std::vector<RowRange> out;
  for (const auto& seg : segments) {
    const std::size_t first = out.size();
    for (std::size_t b = seg.begin; b < seg.end; b += batch_size)
      out.push_back({b, std::min(seg.end, b + batch_size)});
    if (out.size() - first >= 2 && out.back().size() == 1) {
      out[out.size() - 2].end = out.back().end;
      out.pop_back();
    }
  }
  return out;
}

// Loss breakdown of `model` on a whole set, each segment treated as a window.
inline LossBreakdown evaluate_set(const Mlp& model, const SupervisedSet& set, const LossSpec& loss) {
  const Matrix pred = predict(model, set.x);
  const auto segs = set.segments();
  return evaluate_loss(pred, segs, set.y, loss);
}

struct TrainResult {
  Mlp model;
  TrainingLog log;
};

namespace detail {

inline bool finite(const LossBreakdown& b) {
  return std::isfinite(b.total) && std::isfinite(b.l_data) && std::isfinite(b.r1) &&
         std::isfinite(b.r2);
}

// Window-local view of the full-set loss for one minibatch.
struct Batch {
  Matrix x, y;
  RowRange local;
};

inline Batch take(const SupervisedSet& set, const RowRange& w) {
  return {set.x.slice_rows(w.begin, w.end), set.y.slice_rows(w.begin, w.end), {0, w.size()}};
}

}  // namespace detail

// Minibatch training. Windows are shuffled each epoch with a generator seeded
// from cfg.seed, so identical inputs give bit-identical parameters.
inline TrainResult train(Mlp model, const TrainingData& data, const LossSpec& loss,
                         const TrainConfig& cfg) {
  if (!data.train || data.train->rows() == 0) throw DataError("training set is empty");
  cfg.validate(loss);
  loss.physics.validate();
  model.validate();
  if (data.train->x.cols() != model.input_dim() || data.train->y.cols() != model.output_dim())
    throw ShapeError("training data does not match model dimensions");

  TrainResult result{std::move(model), {}};
  Mlp& m = result.model;
  AdamState adam = AdamState::for_model(m);
  std::mt19937_64 rng(cfg.seed);
  const auto segs = data.train->segments();
  std::vector<RowRange> windows = make_windows(segs, cfg.batch_size);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(windows.begin(), windows.end(), rng);
    LossBreakdown sum;
    for (const auto& w : windows) {
      auto batch = detail::take(*data.train, w);
      const auto trace = forward(m, batch.x);
      const std::span<const RowRange> local(&batch.local, 1);
      const auto b = evaluate_loss(trace.output(), local, batch.y, loss);
      if (!detail::finite(b)) throw NumericError("training loss is not finite", epoch);
      sum.l_data += b.l_data;
      sum.r1 += b.r1;
      sum.r2 += b.r2;
      sum.total += b.total;
      const Matrix dy = loss_gradient(trace.output(), local, batch.y, loss);
      const Gradients g = backward(m, trace, dy);
      if (cfg.optimizer == Optimizer::Adam)
        adam_step(m, g, adam, cfg.learning_rate);
      else
        sgd_step(m, g, cfg.learning_rate);
    }
    const double nw = static_cast<double>(windows.size());
    EpochRecord rec{epoch, {sum.l_data / nw, sum.r1 / nw, sum.r2 / nw, sum.total / nw}, {}};
    if (data.validation && data.validation->rows() > 0) {
      rec.validation = evaluate_set(m, *data.validation, loss);
      if (!detail::finite(rec.validation))
        throw NumericError("validation loss is not finite", epoch);
    }
    result.log.epochs.push_back(rec);
    if (cfg.loss_threshold && rec.train.total <= *cfg.loss_threshold) {
      result.log.stopped_early = true;
      break;
    }
  }
  return result;
}

}  // namespace pgnn
