#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"
#include "pgnn/dataset.hpp"
#include "pgnn/error.hpp"
#include "pgnn/eval.hpp"
#include "pgnn/mlp.hpp"
#include "pgnn/physics.hpp"
#include "pgnn/train.hpp"

namespace pgnn {

enum class ElementKind { Neuron, Weight };
enum class PruneScheme { Standard, PhysicsGuided };

inline const char* to_string(ElementKind k) { return k == ElementKind::Neuron ? "neuron" : "weight"; }
inline const char* to_string(PruneScheme s) {
  return s == PruneScheme::Standard ? "standard" : "physics-guided";
}

// Neuron: (hidden layer, neuron). Weight: (layer, output row, input column).
struct ElementId {
  std::size_t layer = 0;
  std::size_t index = 0;
  std::size_t column = 0;

  friend auto operator<=>(const ElementId&, const ElementId&) = default;
};

// Scores per element in (layer, index, column) order. `s` holds sensitivity
// scores, `c` constraint-violation scores, `t` the ranking score.
struct ScoreTable {
  ElementKind kind = ElementKind::Neuron;
  std::vector<ElementId> ids;
  std::vector<double> s;
  std::vector<double> c;
  std::vector<double> t;

  std::size_t size() const { return ids.size(); }
};

struct PruneConfig {
  ElementKind kind = ElementKind::Neuron;
  double ratio = 0.3;
  double alpha = 0.0;
  std::size_t fine_tune_epochs = 10;
  std::size_t scoring_rows = 1024;

  void validate() const {
    if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("pruning ratio must lie in [0, 1)");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    if (scoring_rows == 0) throw ConfigError("scoring batch must hold at least one row");
  }
};

struct PruneReport {
  PruneScheme scheme = PruneScheme::Standard;
  ElementKind kind = ElementKind::Neuron;
  double ratio = 0.0;
  double alpha = 0.0;
  std::size_t total_elements = 0;
  std::size_t pruned = 0;
  std::vector<ElementId> pruned_ids;
  std::size_t params_before = 0;  // effective (unmasked) parameters
  std::size_t params_after = 0;
  std::size_t stored_before = 0;
  std::size_t stored_after = 0;
  std::vector<std::size_t> dims_before;
  std::vector<std::size_t> dims_after;
  double nrmse_before = 0.0;       // validation dBH/dt, trained model
  double nrmse_after_prune = 0.0;  // before fine-tuning
  double nrmse_after = 0.0;        // after fine-tuning
  ScoreTable scores;
};

// The last `rows` rows of the training split.
inline SupervisedSet scoring_batch(const SupervisedSet& train, std::size_t rows) {
  if (train.rows() == 0) throw DataError("scoring batch: empty training set");
  const std::size_t n = std::min(rows, train.rows());
  return train.slice(train.rows() - n, train.rows());
}

namespace detail {

// Per-element |dL/d element| given dL/dYhat on the batch. Neuron scores sum
// |dL/dh| over rows: for a batch-mean loss that is the mean per-row
// sensitivity. A ReLU unit contributes only on rows where it fires, so a
// neuron that is dead on the batch, and whose removal changes nothing,
// scores 0. Weight scores are |dL/dw| of the batch loss.
inline void element_scores(const Mlp& model, const ForwardTrace& trace, const Matrix& upstream,
                           ElementKind kind, std::vector<ElementId>& ids, std::vector<double>& out) {
  const Gradients g = backward(model, trace, upstream);
  ids.clear();
  out.clear();
  if (kind == ElementKind::Neuron) {
    for (std::size_t l = 0; l < g.hidden_outputs.size(); ++l) {
      const Matrix& dh = g.hidden_outputs[l];
      const Matrix& z = trace.pre[l];
      const bool relu = model.layers[l].activation == Activation::ReLU;
      for (std::size_t j = 0; j < dh.cols(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < dh.rows(); ++i)
          if (!relu || z(i, j) > 0.0) acc += std::abs(dh(i, j));
        ids.push_back({l, j, 0});
        out.push_back(acc);
      }
    }
  } else {
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      const Matrix& dw = g.weights[l];
      for (std::size_t o = 0; o < dw.rows(); ++o)
        for (std::size_t k = 0; k < dw.cols(); ++k) {
          if (model.is_masked(l, o, k)) continue;
          ids.push_back({l, o, k});
          out.push_back(std::abs(dw(o, k)));
        }
    }
  }
}

inline void require_batch(const Mlp& model, const SupervisedSet& batch) {
  if (batch.rows() == 0) throw DataError("scoring batch is empty");
  if (batch.x.cols() != model.input_dim() || batch.y.cols() != model.output_dim())
    throw ShapeError("scoring batch does not match the model");
}

}  // namespace detail

// S = |dL/do| under the model's training loss.
inline ScoreTable importance_scores(const Mlp& model, const SupervisedSet& batch,
                                    const LossSpec& loss, ElementKind kind) {
  detail::require_batch(model, batch);
  const auto trace = forward(model, batch.x);
  const auto segs = batch.segments();
  const Matrix dy = loss_gradient(trace.output(), segs, batch.y, loss);
  ScoreTable t;
  t.kind = kind;
  detail::element_scores(model, trace, dy, kind, t.ids, t.s);
  t.t = t.s;
  return t;
}

// C = |dL_physics/do| with L_physics = R1 + R2; lambda plays no part.
inline ScoreTable constraint_scores(const Mlp& model, const SupervisedSet& batch,
                                    const CompositeLossConfig& physics, ElementKind kind) {
  detail::require_batch(model, batch);
  const auto trace = forward(model, batch.x);
  const auto segs = batch.segments();
  const Matrix dy = physics_loss_grad(trace.output(), segs, physics);
  ScoreTable t;
  t.kind = kind;
  detail::element_scores(model, trace, dy, kind, t.ids, t.c);
  t.t = t.c;
  return t;
}

// T = S + alpha C.
inline ScoreTable combined_scores(const ScoreTable& importance, const ScoreTable& constraint,
                                  double alpha) {
  if (importance.kind != constraint.kind || importance.ids != constraint.ids)
    throw ShapeError("combined_scores: element sets differ");
  if (importance.s.size() != importance.ids.size() || constraint.c.size() != constraint.ids.size())
    throw ShapeError("combined_scores: missing score columns");
  ScoreTable t;
  t.kind = importance.kind;
  t.ids = importance.ids;
  t.s = importance.s;
  t.c = constraint.c;
  t.t.resize(t.ids.size());
  for (std::size_t i = 0; i < t.ids.size(); ++i) t.t[i] = t.s[i] + alpha * t.c[i];
  return t;
}

// floor(r * n); the small offset keeps decimal ratios such as 0.3 * 90 from
// rounding down to 26.
inline std::size_t prune_count(double ratio, std::size_t total) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("pruning ratio must lie in [0, 1)");
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(total) + 1e-9));
}

// Lowest-T elements, ties broken by element order.
inline std::vector<ElementId> select_prunable(const ScoreTable& table, double ratio) {
  const std::size_t k = prune_count(ratio, table.size());
  std::vector<std::size_t> order(table.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (table.t[a] != table.t[b]) return table.t[a] < table.t[b];
    return table.ids[a] < table.ids[b];
  });
  std::vector<ElementId> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(table.ids[order[i]]);
  return out;
}

// Weight elements are masked; neurons are removed structurally together with
// their bias, incoming weight row and the next layer's input column.
inline Mlp apply_prune(Mlp model, const std::vector<ElementId>& ids, ElementKind kind) {
  model.validate();
  if (kind == ElementKind::Weight) {
    model.ensure_masks();
    for (const auto& id : ids) {
      if (id.layer >= model.layers.size() || id.index >= model.layers[id.layer].output_dim ||
          id.column >= model.layers[id.layer].input_dim)
        throw ShapeError("weight element out of range");
      model.masks[id.layer](id.index, id.column) = 0.0;
    }
    model.apply_masks();
    return model;
  }

  std::map<std::size_t, std::vector<std::size_t>> by_layer;
  for (const auto& id : ids) {
    if (id.layer + 1 >= model.layers.size())
      throw ShapeError("only hidden neurons can be pruned");
    if (id.index >= model.layers[id.layer].output_dim) throw ShapeError("neuron index out of range");
    by_layer[id.layer].push_back(id.index);
  }
  for (auto& [layer, idx] : by_layer) {
    std::sort(idx.begin(), idx.end());
    if (std::adjacent_find(idx.begin(), idx.end()) != idx.end())
      throw ShapeError("duplicate neuron in prune list");
    if (idx.size() >= model.layers[layer].output_dim)
      throw ShapeError("pruning would empty hidden layer " + std::to_string(layer));

    const std::size_t width = model.layers[layer].output_dim;
    std::vector<bool> keep(width, true);
    for (auto j : idx) keep[j] = false;
    const std::size_t kept = width - idx.size();

    auto drop_rows = [&](const Matrix& m) {
      Matrix out(kept, m.cols());
      std::size_t r = 0;
      for (std::size_t j = 0; j < width; ++j)
        if (keep[j]) std::copy(m.row(j).begin(), m.row(j).end(), out.row(r++).begin());
      return out;
    };
    auto drop_cols = [&](const Matrix& m) {
      Matrix out(m.rows(), kept);
      for (std::size_t r = 0; r < m.rows(); ++r) {
        std::size_t c = 0;
        for (std::size_t j = 0; j < width; ++j)
          if (keep[j]) out(r, c++) = m(r, j);
      }
      return out;
    };

    model.weights[layer] = drop_rows(model.weights[layer]);
    model.weights[layer + 1] = drop_cols(model.weights[layer + 1]);
    if (model.has_masks()) {
      model.masks[layer] = drop_rows(model.masks[layer]);
      model.masks[layer + 1] = drop_cols(model.masks[layer + 1]);
    }
    std::vector<double> b;
    for (std::size_t j = 0; j < width; ++j)
      if (keep[j]) b.push_back(model.biases[layer][j]);
    model.biases[layer] = std::move(b);
    model.layers[layer].output_dim = kept;
    model.layers[layer + 1].input_dim = kept;
  }
  model.validate();
  return model;
}

// Continued training under the loss used originally; masks stay in force.
inline TrainResult fine_tune(Mlp model, const TrainingData& data, const LossSpec& loss,
                             TrainConfig cfg, std::size_t epochs) {
  cfg.epochs = epochs;
  cfg.loss_threshold.reset();
  return train(std::move(model), data, loss, cfg);
}

struct PruneInputs {
  const PreparedData* data = nullptr;
  LossSpec loss;          // the loss the model was trained with
  TrainConfig fine_tune;  // epochs taken from PruneConfig
};

struct PruneOutcome {
  Mlp model;
  PruneReport report;
  TrainingLog log;
};

// Score, select, prune and fine-tune in one round.
inline PruneOutcome prune_pipeline(const Mlp& model, const PruneInputs& in, const PruneConfig& cfg,
                                   PruneScheme scheme) {
  cfg.validate();
  if (!in.data) throw ConfigError("prune_pipeline needs prepared data");
  if (scheme == PruneScheme::PhysicsGuided && in.loss.lambda() == 0.0)
    throw ConfigError(
        "physics-guided pruning requires a model trained with a physics-regularised loss");

  const PreparedData& d = *in.data;
  const EvalSet val = EvalSet::validation_of(d, in.loss.physics);
  const SupervisedSet batch = scoring_batch(d.train, cfg.scoring_rows);

  ScoreTable scores = importance_scores(model, batch, in.loss, cfg.kind);
  if (scheme == PruneScheme::PhysicsGuided)
    scores = combined_scores(scores, constraint_scores(model, batch, in.loss.physics, cfg.kind),
                             cfg.alpha);

  PruneReport rep;
  rep.scheme = scheme;
  rep.kind = cfg.kind;
  rep.ratio = cfg.ratio;
  rep.alpha = scheme == PruneScheme::PhysicsGuided ? cfg.alpha : 0.0;
  rep.total_elements = scores.size();
  rep.pruned_ids = select_prunable(scores, cfg.ratio);
  rep.pruned = rep.pruned_ids.size();
  rep.params_before = model.effective_parameter_count();
  rep.stored_before = model.stored_parameter_count();
  rep.dims_before = model.dims();
  rep.nrmse_before = dbh_nrmse(model, val);

  Mlp pruned = apply_prune(model, rep.pruned_ids, cfg.kind);
  rep.nrmse_after_prune = dbh_nrmse(pruned, val);

  TrainingData td{&d.train, &d.validation};
  auto tuned = fine_tune(std::move(pruned), td, in.loss, in.fine_tune, cfg.fine_tune_epochs);
  rep.params_after = tuned.model.effective_parameter_count();
  rep.stored_after = tuned.model.stored_parameter_count();
  rep.dims_after = tuned.model.dims();
  rep.nrmse_after = dbh_nrmse(tuned.model, val);
  rep.scores = std::move(scores);
  return {std::move(tuned.model), std::move(rep), std::move(tuned.log)};
}

// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const PruneReport& r) {
  nlohmann::json j;
  j["scheme"] = to_string(r.scheme);
  j["kind"] = to_string(r.kind);
  j["ratio"] = r.ratio;
  j["alpha"] = r.alpha;
  j["total_elements"] = r.total_elements;
  j["pruned"] = r.pruned;
  j["params_before"] = r.params_before;
  j["params_after"] = r.params_after;
  j["stored_params_before"] = r.stored_before;
  j["stored_params_after"] = r.stored_after;
  j["dims_before"] = r.dims_before;
  j["dims_after"] = r.dims_after;
  j["validation_nrmse_before"] = r.nrmse_before;
  j["validation_nrmse_after_prune"] = r.nrmse_after_prune;
  j["validation_nrmse_after"] = r.nrmse_after;
  return j;
}

// Report JSON plus a score snapshot CSV: layer,index,column,s,c,t,pruned.
inline void write_prune_report(const std::filesystem::path& json_path,
                               const std::filesystem::path& scores_path, const PruneReport& r) {
  {
    std::ofstream f(json_path);
    if (!f) throw DataError("cannot write " + json_path.string());
    f << to_json(r).dump(2) << '\n';
  }
  std::ofstream f(scores_path);
  if (!f) throw DataError("cannot write " + scores_path.string());
  f << "layer,index,column,s,c,t,pruned\n";
  std::vector<ElementId> sorted = r.pruned_ids;
  std::sort(sorted.begin(), sorted.end());
  const auto& t = r.scores;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const bool pruned = std::binary_search(sorted.begin(), sorted.end(), t.ids[i]);
    f << t.ids[i].layer << ',' << t.ids[i].index << ',' << t.ids[i].column << ','
      << detail::format_double(i < t.s.size() ? t.s[i] : 0.0) << ','
      << detail::format_double(i < t.c.size() ? t.c[i] : 0.0) << ','
      << detail::format_double(t.t[i]) << ',' << (pruned ? 1 : 0) << '\n';
  }
}

}  // namespace pgnn
