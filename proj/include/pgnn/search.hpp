#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pgnn/dataset.hpp"
#include "pgnn/error.hpp"
#include "pgnn/eval.hpp"
#include "pgnn/mlp.hpp"
#include "pgnn/pruning.hpp"
#include "pgnn/train.hpp"

namespace pgnn {

struct GridSpec {
  std::string parameter = "lambda";  // "lambda" or "alpha"
  std::vector<double> values;
  std::size_t folds = 1;

  // n evenly spaced points on [0, 1].
  static GridSpec even(std::string parameter, std::size_t n = 26) {
    GridSpec g{std::move(parameter), {}, 1};
    for (std::size_t i = 0; i < n; ++i)
      g.values.push_back(n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1));
    return g;
  }

  void validate() const {
    if (parameter != "lambda" && parameter != "alpha")
      throw ConfigError("grid parameter must be lambda or alpha");
    if (values.empty()) throw ConfigError("grid has no candidates");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] >= 0.0 && values[i] <= 1.0)) throw ConfigError("grid values must lie in [0, 1]");
      if (i > 0 && !(values[i] > values[i - 1]))
        throw ConfigError("grid values must be sorted and distinct");
    }
    if (folds != 1) throw ConfigError("only a single chronological validation fold is supported");
  }
};

struct CandidateResult {
  double value = 0.0;
  std::optional<double> score;  // validation NRMSE on dBH/dt; empty if training diverged
  std::vector<double> per_target_nrmse;
  std::string failure;
};

struct SearchResult {
  std::string parameter;
  std::vector<CandidateResult> candidates;
  double best_value = 0.0;
  double best_score = 0.0;
};

namespace detail {

// Runs `eval(i)` for every candidate index on up to `threads` workers.
// Results are written by index, so the order of completion does not matter.
inline void run_candidates(std::size_t n, std::size_t threads,
                           const std::function<void(std::size_t)>& eval) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) eval(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < n; i = next++) eval(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline SearchResult finish(std::string parameter, std::vector<CandidateResult> cands) {
  SearchResult r{std::move(parameter), std::move(cands), 0.0, 0.0};
  bool found = false;
  for (const auto& c : r.candidates) {
    if (!c.score) continue;
    if (!found || *c.score < r.best_score) {
      r.best_value = c.value;
      r.best_score = *c.score;
      found = true;
    }
  }
  if (!found) throw NumericError("every grid candidate diverged");
  return r;
}

}  // namespace detail

using WarningSink = std::function<void(const std::string&)>;

// One physics-guided model per lambda, all from the same initial weights and
// shuffle seed. Divergent candidates are excluded with a warning.
inline SearchResult grid_search_lambda(const PreparedData& data, const std::vector<std::size_t>& dims,
                                       const GridSpec& grid, const TrainConfig& cfg,
                                       std::size_t threads = 1, const WarningSink& warn = {},
                                       ResidualNorm norm = ResidualNorm::MeanAbsolute,
                                       double dt_minutes = 1.0) {
  grid.validate();
  if (grid.parameter != "lambda") throw ConfigError("grid_search_lambda needs a lambda grid");
  std::vector<CandidateResult> cands(grid.values.size());
  detail::run_candidates(cands.size(), threads, [&](std::size_t i) {
    auto& c = cands[i];
    c.value = grid.values[i];
    CompositeLossConfig phys = physics_config(data.target_scaler, c.value, {}, dt_minutes);
    phys.norm = norm;
    const LossSpec loss = LossSpec::composite(phys);
    try {
      auto res = train(make_mlp(dims, cfg.seed), {&data.train, &data.validation}, loss, cfg);
      auto rep = evaluate_variant(res.model, EvalSet::validation_of(data, loss.physics), "");
      c.score = rep.dbh_nrmse(loss.physics.layout);
      c.per_target_nrmse = rep.nrmse;
    } catch (const NumericError& e) {
      c.failure = e.what();
    }
  });
  for (const auto& c : cands)
    if (!c.score && warn) warn("lambda=" + detail::format_double(c.value) + " excluded: " + c.failure);
  return detail::finish("lambda", std::move(cands));
}

// Physics-guided pruning per alpha on the same trained model, scored by the
// post-fine-tuning validation NRMSE.
inline SearchResult grid_search_alpha(const Mlp& model, const PruneInputs& in, const GridSpec& grid,
                                      const PruneConfig& prune, std::size_t threads = 1,
                                      const WarningSink& warn = {}) {
  grid.validate();
  if (grid.parameter != "alpha") throw ConfigError("grid_search_alpha needs an alpha grid");
  if (in.loss.lambda() == 0.0)
    throw ConfigError("alpha search requires a physics-guided model");
  std::vector<CandidateResult> cands(grid.values.size());
  detail::run_candidates(cands.size(), threads, [&](std::size_t i) {
    auto& c = cands[i];
    c.value = grid.values[i];
    PruneConfig pc = prune;
    pc.alpha = c.value;
    try {
      auto out = prune_pipeline(model, in, pc, PruneScheme::PhysicsGuided);
      auto rep = evaluate_variant(out.model, EvalSet::validation_of(*in.data, in.loss.physics), "");
      c.score = rep.dbh_nrmse(in.loss.physics.layout);
      c.per_target_nrmse = rep.nrmse;
    } catch (const NumericError& e) {
      c.failure = e.what();
    }
  });
  for (const auto& c : cands)
    if (!c.score && warn) warn("alpha=" + detail::format_double(c.value) + " excluded: " + c.failure);
  return detail::finish("alpha", std::move(cands));
}

// candidate,score,nrmse_<target>...; diverged candidates have an empty score.
inline void write_search_csv(const std::filesystem::path& path, const SearchResult& r,
                             const TargetLayout& layout = {}) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << "candidate,score";
  for (std::size_t j = 0; j < kTargetCount; ++j) f << ",nrmse_" << layout.name_of(j);
  f << '\n';
  for (const auto& c : r.candidates) {
    f << detail::format_double(c.value) << ',';
    if (c.score) f << detail::format_double(*c.score);
    for (std::size_t j = 0; j < kTargetCount; ++j) {
      f << ',';
      if (j < c.per_target_nrmse.size()) f << detail::format_double(c.per_target_nrmse[j]);
    }
    f << '\n';
  }
}

}  // namespace pgnn
