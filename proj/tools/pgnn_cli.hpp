#pragma once

// Command-line front end. Everything except the four global flags lives in a
// JSON run file; see README.md for the keys.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pgnn/pgnn.hpp"

namespace pgnn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct RunConfig {
  std::uint64_t seed = 1;
  fs::path out = "out";

  // Dataset: an ingested CSV when `csv` is set, otherwise generated.
  std::optional<fs::path> csv;
  std::optional<fs::path> schema;
  SynthConfig synth;
  std::optional<std::uint64_t> synth_seed;
  double dt_minutes = 1.0;
  SplitSpec split;

  std::vector<std::size_t> dims = {10, 30, 30, 30, 7};
  TrainConfig train;
  Objective objective = Objective::Composite;
  double lambda = 0.36;
  ResidualNorm norm = ResidualNorm::MeanAbsolute;

  std::optional<fs::path> prune_model;
  PruneScheme scheme = PruneScheme::PhysicsGuided;
  PruneConfig prune;
  std::optional<std::size_t> fine_tune_epochs;

  GridSpec grid = GridSpec::even("lambda");
  std::size_t threads = 1;
  std::optional<fs::path> search_model;

  std::optional<fs::path> eval_model;
  NoiseSweepConfig noise;
  std::vector<fs::path> compare_models;

  LossSpec loss(const MinMaxScaler& targets) const {
    CompositeLossConfig phys =
        physics_config(targets, objective == Objective::Composite ? lambda : 0.0, {}, dt_minutes);
    phys.norm = norm;
    return objective == Objective::Composite ? LossSpec::composite(phys) : LossSpec::mse(phys);
  }

  // Seeds: the run seed drives weight init, minibatch shuffling and the noise
  // sweep; the generator uses data.synth.seed when given, else the run seed.
  void finalize() {
    train.seed = seed;
    synth.seed = synth_seed.value_or(seed);
    noise.seed = seed;
    prune.fine_tune_epochs =
        fine_tune_epochs.value_or(std::max<std::size_t>(1, (train.epochs + 2) / 5));
    validate();
  }

  void validate() const {
    if (dims.size() < 2 || dims.front() != kChannelCount || dims.back() != kTargetCount)
      throw ConfigError("model.dims must start with 10 inputs and end with 7 outputs");
    if (std::ranges::find(dims, std::size_t{0}) != dims.end())
      throw ConfigError("model.dims entries must be >= 1");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("loss.lambda must lie in [0, 1]");
    if (!(dt_minutes > 0.0)) throw ConfigError("data.dt_minutes must be positive");
    LossSpec probe = objective == Objective::Composite ? LossSpec::composite({}) : LossSpec::mse();
    probe.physics.lambda = objective == Objective::Composite ? lambda : 0.0;
    train.validate(probe);
    synth.validate();
    split.validate();
    prune.validate();
    grid.validate();
    noise.validate();
    if (threads == 0) throw ConfigError("search.threads must be >= 1");
  }
};

namespace detail {

inline void allow_only(const json& j, const std::string& where,
                       std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& into) {
  if (j.contains(key) && !j.at(key).is_null()) into = j.at(key).get<T>();
}

template <class E>
E pick(const std::string& value, const std::string& key,
       std::initializer_list<std::pair<std::string_view, E>> choices) {
  for (const auto& [name, e] : choices)
    if (value == name) return e;
  std::string names;
  for (const auto& [name, e] : choices) names += (names.empty() ? "" : ", ") + std::string(name);
  throw ConfigError(key + " must be one of " + names + ", got '" + value + "'");
}

// A run file may name a `base` file whose settings it overrides key by key.
inline json load_tree(const fs::path& path, int depth = 0) {
  if (depth > 8) throw ConfigError("run file bases nest too deeply at " + path.string());
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open run file " + path.string());
  json j;
  try {
    j = json::parse(f, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path.string() + ": run file must be a JSON object");
  if (!j.contains("base")) return j;
  if (!j.at("base").is_string()) throw ConfigError(path.string() + ": base must be a path");
  json tree = load_tree(path.parent_path() / j.at("base").get<std::string>(), depth + 1);
  j.erase("base");
  tree.merge_patch(j);
  return tree;
}

inline fs::path resolve(const fs::path& root, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : root / path;
}

inline void parse_data(const json& d, const fs::path& root, RunConfig& c) {
  allow_only(d, "data", {"csv", "schema", "synth", "dt_minutes", "train_fraction", "validation_fraction"});
  if (d.contains("csv")) c.csv = resolve(root, d.at("csv").get<std::string>());
  if (d.contains("schema")) c.schema = resolve(root, d.at("schema").get<std::string>());
  read(d, "dt_minutes", c.dt_minutes);
  read(d, "train_fraction", c.split.train_fraction);
  read(d, "validation_fraction", c.split.validation_fraction);
  if (!d.contains("synth")) return;
  const json& s = d.at("synth");
  allow_only(s, "data.synth",
             {"n_minutes", "seed", "start", "mean_v", "sd_v", "imf_sd", "corr_minutes", "mean_rho", "mean_t",
              "coupling_gain", "east_share", "decay", "process_noise", "noise", "noiseless", "gap_fraction"});
  SynthConfig& sc = c.synth;
  read(s, "n_minutes", sc.n_minutes);
  read(s, "seed", c.synth_seed);
  if (s.contains("start")) sc.start_minute = parse_timestamp(s.at("start").get<std::string>());
  read(s, "mean_v", sc.mean_v);
  read(s, "sd_v", sc.sd_v);
  read(s, "imf_sd", sc.imf_sd);
  read(s, "corr_minutes", sc.corr_minutes);
  read(s, "mean_rho", sc.mean_rho);
  read(s, "mean_t", sc.mean_t);
  read(s, "coupling_gain", sc.coupling_gain);
  read(s, "east_share", sc.east_share);
  read(s, "decay", sc.decay);
  read(s, "process_noise", sc.process_noise);
  read(s, "gap_fraction", sc.gap_fraction);
  if (s.contains("noise")) {
    const auto v = s.at("noise").get<std::vector<double>>();
    if (v.size() != kChannelCount) throw ConfigError("data.synth.noise needs one sigma per channel (10)");
    std::copy(v.begin(), v.end(), sc.noise.begin());
  }
  if (s.value("noiseless", false)) sc = sc.noiseless();
}

inline void parse_train(const json& t, RunConfig& c) {
  allow_only(t, "train", {"epochs", "learning_rate", "batch_size", "optimizer", "loss_threshold"});
  read(t, "epochs", c.train.epochs);
  read(t, "learning_rate", c.train.learning_rate);
  read(t, "batch_size", c.train.batch_size);
  read(t, "loss_threshold", c.train.loss_threshold);
  if (t.contains("optimizer"))
    c.train.optimizer = pick<Optimizer>(t.at("optimizer").get<std::string>(), "train.optimizer",
                                        {{"adam", Optimizer::Adam}, {"sgd", Optimizer::Sgd}});
}

inline void parse_loss(const json& l, RunConfig& c) {
  allow_only(l, "loss", {"objective", "lambda", "norm"});
  if (l.contains("objective"))
    c.objective = pick<Objective>(l.at("objective").get<std::string>(), "loss.objective",
                                  {{"mse", Objective::Mse}, {"composite", Objective::Composite}});
  read(l, "lambda", c.lambda);
  if (l.contains("norm"))
    c.norm = pick<ResidualNorm>(l.at("norm").get<std::string>(), "loss.norm",
                                {{"mean_absolute", ResidualNorm::MeanAbsolute},
                                 {"mean_square", ResidualNorm::MeanSquare}});
}

inline void parse_prune(const json& p, const fs::path& root, RunConfig& c) {
  allow_only(p, "prune", {"model", "scheme", "kind", "ratio", "alpha", "fine_tune_epochs", "scoring_rows"});
  if (p.contains("model")) c.prune_model = resolve(root, p.at("model").get<std::string>());
  if (p.contains("scheme"))
    c.scheme = pick<PruneScheme>(p.at("scheme").get<std::string>(), "prune.scheme",
                                 {{"standard", PruneScheme::Standard},
                                  {"physics-guided", PruneScheme::PhysicsGuided}});
  if (p.contains("kind"))
    c.prune.kind = pick<ElementKind>(p.at("kind").get<std::string>(), "prune.kind",
                                     {{"neuron", ElementKind::Neuron}, {"weight", ElementKind::Weight}});
  read(p, "ratio", c.prune.ratio);
  read(p, "alpha", c.prune.alpha);
  read(p, "fine_tune_epochs", c.fine_tune_epochs);
  read(p, "scoring_rows", c.prune.scoring_rows);
}

inline void parse_search(const json& s, const fs::path& root, RunConfig& c) {
  allow_only(s, "search", {"parameter", "values", "points", "threads", "model"});
  const std::string param = s.value("parameter", std::string("lambda"));
  if (s.contains("values") && s.contains("points"))
    throw ConfigError("search takes either values or points, not both");
  c.grid = GridSpec::even(param, s.value("points", std::size_t{26}));
  if (s.contains("values")) c.grid.values = s.at("values").get<std::vector<double>>();
  read(s, "threads", c.threads);
  if (s.contains("model")) c.search_model = resolve(root, s.at("model").get<std::string>());
}

inline void parse_eval(const json& e, const fs::path& root, RunConfig& c) {
  allow_only(e, "eval", {"model", "noise_levels"});
  if (e.contains("model")) c.eval_model = resolve(root, e.at("model").get<std::string>());
  read(e, "noise_levels", c.noise.levels);
}

inline void parse_compare(const json& e, const fs::path& root, RunConfig& c) {
  allow_only(e, "compare", {"models"});
  for (const auto& m : e.at("models")) c.compare_models.push_back(resolve(root, m.get<std::string>()));
}

}  // namespace detail

// Relative paths in the run file, including `out`, resolve against the
// directory of the file named on the command line.
inline RunConfig parse_run_config(const json& j, const fs::path& root) {
  RunConfig c;
  try {
    detail::allow_only(j, "run file",
                       {"seed", "out", "data", "model", "train", "loss", "prune", "search", "eval", "compare"});
    detail::read(j, "seed", c.seed);
    if (j.contains("out")) c.out = detail::resolve(root, j.at("out").get<std::string>());
    else c.out = root / c.out;
    if (j.contains("data")) detail::parse_data(j.at("data"), root, c);
    if (j.contains("model")) {
      detail::allow_only(j.at("model"), "model", {"dims"});
      detail::read(j.at("model"), "dims", c.dims);
    }
    if (j.contains("train")) detail::parse_train(j.at("train"), c);
    if (j.contains("loss")) detail::parse_loss(j.at("loss"), c);
    if (j.contains("prune")) detail::parse_prune(j.at("prune"), root, c);
    if (j.contains("search")) detail::parse_search(j.at("search"), root, c);
    if (j.contains("eval")) detail::parse_eval(j.at("eval"), root, c);
    if (j.contains("compare")) detail::parse_compare(j.at("compare"), root, c);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run file: ") + e.what());
  } catch (const DataError& e) {
    throw ConfigError(std::string("run file: ") + e.what());
  }
  return c;
}

inline RunConfig load_run_config(const fs::path& path) {
  return parse_run_config(detail::load_tree(path), path.parent_path());
}

// ---------------------------------------------------------------------------

// Everything the commands print goes to standard error; results live in files.
struct Context {
  std::ostream& err;
  bool verbose = false;

  void wrote(const fs::path& p) const { err << "wrote " << p.string() << '\n'; }
  void note(const std::string& s) const { err << s << '\n'; }
  void detail(const std::string& s) const {
    if (verbose) err << s << '\n';
  }
};

namespace detail {

inline std::string num(double v) { return pgnn::detail::format_double(v); }

inline SupervisedSet load_supervised(const RunConfig& c, const Context& ctx) {
  RawSeries raw;
  if (c.csv) {
    raw = ingest_csv(*c.csv, c.schema ? load_schema(*c.schema) : CsvSchema::defaults());
    ctx.detail("read " + std::to_string(raw.size()) + " minutes from " + c.csv->string());
  } else {
    raw = generate(c.synth);
    ctx.detail("generated " + std::to_string(raw.size()) + " synthetic minutes (seed " +
               std::to_string(c.synth.seed) + ")");
  }
  GapReport gaps;
  const RawSeries filled = interpolate_gaps(raw, &gaps);
  ctx.detail("gap fraction " + num(gaps.overall_fraction()) + ", trimmed rows " +
             std::to_string(gaps.trimmed_rows));
  return derive_targets(filled, TargetLayout{}, c.dt_minutes);
}

// Split with the scalers stored alongside a model rather than refitted.
inline PreparedData prepare_with(const SupervisedSet& set, const SplitSpec& spec, const ModelBundle& b) {
  if (b.features.width() != kChannelCount || b.targets.width() != kTargetCount)
    throw DataError("model scalers do not match the dataset channels");
  PreparedData p;
  p.raw = split(set, spec);
  p.feature_scaler = b.features;
  p.target_scaler = b.targets;
  p.train = scale_set(p.raw.train, p.feature_scaler, p.target_scaler);
  p.validation = scale_set(p.raw.validation, p.feature_scaler, p.target_scaler);
  p.test = scale_set(p.raw.test, p.feature_scaler, p.target_scaler);
  return p;
}

// The loss a stored model was trained with.
inline LossSpec loss_of(const ModelBundle& b, ResidualNorm norm) {
  CompositeLossConfig phys = physics_config(b.targets, b.meta.lambda, b.layout, b.meta.dt_minutes);
  phys.norm = norm;
  return b.meta.objective == "composite" ? LossSpec::composite(phys) : LossSpec::mse(phys);
}

inline const fs::path& need(const std::optional<fs::path>& p, const char* key) {
  if (!p) throw ConfigError(std::string(key) + " is required for this command");
  return *p;
}

inline void write_log_csv(const fs::path& path, const TrainingLog& log) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << "epoch,train_total,train_l_data,train_r1,train_r2,"
       "validation_total,validation_l_data,validation_r1,validation_r2\n";
  for (const auto& e : log.epochs) {
    f << e.epoch;
    for (const auto* b : {&e.train, &e.validation})
      f << ',' << num(b->total) << ',' << num(b->l_data) << ',' << num(b->r1) << ',' << num(b->r2);
    f << '\n';
  }
}

inline WarningSink warn_to(const Context& ctx) {
  return [&ctx](const std::string& w) { ctx.note("warning: " + w); };
}

}  // namespace detail

inline void cmd_synth(const RunConfig& c, const Context& ctx) {
  const RawSeries s = generate(c.synth);
  fs::create_directories(c.out);
  const fs::path path = c.out / "synth.csv";
  write_csv(path, s, CsvSchema::defaults());
  ctx.note("synth: " + std::to_string(s.size()) + " minutes, " + std::to_string(s.gap_count()) +
           " gap cells");
  ctx.wrote(path);
}

inline void cmd_ingest(const RunConfig& c, const Context& ctx) {
  const fs::path& csv = detail::need(c.csv, "data.csv");
  const RawSeries raw = ingest_csv(csv, c.schema ? load_schema(*c.schema) : CsvSchema::defaults());
  GapReport gaps;
  const SupervisedSet set = derive_targets(interpolate_gaps(raw, &gaps), TargetLayout{}, c.dt_minutes);
  fs::create_directories(c.out);
  save_supervised(set, c.out / "dataset");

  json report;
  report["rows_read"] = raw.size();
  report["segments"] = raw.segment_starts.size();
  report["gap_cells"] = gaps.total_cells == 0 ? 0 : std::accumulate(gaps.gap_cells.begin(), gaps.gap_cells.end(), std::size_t{0});
  report["gap_fraction"] = gaps.overall_fraction();
  report["trimmed_rows"] = gaps.trimmed_rows;
  report["supervised_rows"] = set.rows();
  for (std::size_t ch = 0; ch < kChannelCount; ++ch) report["channel_gap_fraction"][kChannelNames[ch]] = gaps.fraction(ch);
  const fs::path rep = c.out / "gap_report.json";
  std::ofstream(rep) << report.dump(2) << '\n';

  ctx.note("ingest: " + std::to_string(set.rows()) + " supervised rows, gap fraction " +
           detail::num(gaps.overall_fraction()));
  for (const char* suffix : {"_features.csv", "_targets.csv", "_segments.csv"})
    ctx.wrote(c.out / (std::string("dataset") + suffix));
  ctx.wrote(rep);
}

inline void cmd_train(const RunConfig& c, const Context& ctx) {
  const PreparedData d = prepare(detail::load_supervised(c, ctx), c.split);
  const LossSpec loss = c.loss(d.target_scaler);
  const auto res = train(make_mlp(c.dims, c.seed), {&d.train, &d.validation}, loss, c.train);

  const bool pg = c.objective == Objective::Composite;
  ModelBundle b;
  b.model = res.model;
  b.features = d.feature_scaler;
  b.targets = d.target_scaler;
  b.meta.label = pg ? "pgnn-offline" : "std-offline";
  b.meta.seed = c.seed;
  b.meta.objective = pg ? "composite" : "mse";
  b.meta.lambda = loss.lambda();
  b.meta.dt_minutes = c.dt_minutes;

  fs::create_directories(c.out);
  const fs::path model = c.out / (b.meta.label + ".pgnn");
  const fs::path log = c.out / (b.meta.label + "_log.csv");
  save_model(b, model);
  detail::write_log_csv(log, res.log);
  for (const auto& e : res.log.epochs)
    ctx.detail("epoch " + std::to_string(e.epoch) + " train " + detail::num(e.train.total) + " validation " +
               detail::num(e.validation.total));
  ctx.note("train: " + b.meta.label + ", " + std::to_string(res.log.epochs.size()) +
           " epochs, validation dBH/dt NRMSE " +
           detail::num(dbh_nrmse(res.model, EvalSet::validation_of(d, loss.physics))));
  ctx.wrote(model);
  ctx.wrote(log);
}

inline void cmd_search(const RunConfig& c, const Context& ctx) {
  const SupervisedSet set = detail::load_supervised(c, ctx);
  SearchResult r;
  fs::path table;
  if (c.grid.parameter == "lambda") {
    const PreparedData d = prepare(set, c.split);
    r = grid_search_lambda(d, c.dims, c.grid, c.train, c.threads, detail::warn_to(ctx), c.norm, c.dt_minutes);
    table = c.out / "search_lambda.csv";
  } else {
    const ModelBundle b = load_model(detail::need(c.search_model, "search.model"));
    const PreparedData d = detail::prepare_with(set, c.split, b);
    PruneInputs in{&d, detail::loss_of(b, c.norm), c.train};
    r = grid_search_alpha(b.model, in, c.grid, c.prune, c.threads, detail::warn_to(ctx));
    table = c.out / (std::string("search_alpha_") + to_string(c.prune.kind) + ".csv");
  }
  fs::create_directories(c.out);
  write_search_csv(table, r);
  for (const auto& cand : r.candidates)
    ctx.detail(c.grid.parameter + "=" + detail::num(cand.value) + " score " +
               (cand.score ? detail::num(*cand.score) : std::string("diverged")));
  ctx.note("search: best " + r.parameter + " = " + detail::num(r.best_value) + ", validation dBH/dt NRMSE " +
           detail::num(r.best_score));
  ctx.wrote(table);
}

inline void cmd_prune(const RunConfig& c, const Context& ctx) {
  ModelBundle b = load_model(detail::need(c.prune_model, "prune.model"));
  const PreparedData d = detail::prepare_with(detail::load_supervised(c, ctx), c.split, b);
  PruneInputs in{&d, detail::loss_of(b, c.norm), c.train};
  const auto out = prune_pipeline(b.model, in, c.prune, c.scheme);

  const bool pg = c.scheme == PruneScheme::PhysicsGuided;
  const std::string label = std::string(b.meta.objective == "composite" ? "pgnn" : "std") + "+" +
                            (pg ? "pg-" : "std-") + to_string(c.prune.kind);
  b.model = out.model;
  b.meta.label = label;
  b.meta.scheme = to_string(c.scheme);
  b.meta.kind = to_string(c.prune.kind);
  b.meta.ratio = c.prune.ratio;
  b.meta.alpha = out.report.alpha;

  fs::create_directories(c.out);
  const fs::path model = c.out / (label + ".pgnn");
  const fs::path report = c.out / (label + "_report.json");
  const fs::path scores = c.out / (label + "_scores.csv");
  const fs::path log = c.out / (label + "_log.csv");
  save_model(b, model);
  write_prune_report(report, scores, out.report);
  detail::write_log_csv(log, out.log);
  ctx.note("prune: " + label + ", " + std::to_string(out.report.pruned) + " of " +
           std::to_string(out.report.total_elements) + " elements, validation dBH/dt NRMSE " +
           detail::num(out.report.nrmse_before) + " -> " + detail::num(out.report.nrmse_after));
  for (const auto& p : {model, report, scores, log}) ctx.wrote(p);
}

inline void cmd_eval(const RunConfig& c, const Context& ctx) {
  const ModelBundle b = load_model(detail::need(c.eval_model, "eval.model"));
  const PreparedData d = detail::prepare_with(detail::load_supervised(c, ctx), c.split, b);
  const EvalSet set = EvalSet::test_of(d, detail::loss_of(b, c.norm).physics);
  const auto rep = evaluate_variant(b.model, set, b.meta.label);
  const auto sweep = noise_sweep(b.model, set, c.noise, b.meta.label);

  fs::create_directories(c.out);
  const fs::path metrics = c.out / (b.meta.label + "_metrics.csv");
  const fs::path sweep_csv = c.out / (b.meta.label + "_sweep.csv");
  const fs::path trace = c.out / (b.meta.label + "_trace.csv");
  write_metrics_csv(metrics, {rep});
  write_sweep_csv(sweep_csv, {sweep});
  write_trace_csv(trace, {rep});
  ctx.note("eval: " + b.meta.label + ", test dBH/dt NRMSE " + detail::num(rep.dbh_nrmse()) + ", R1 " +
           detail::num(rep.r1) + ", R2 " + detail::num(rep.r2));
  for (const auto& p : {metrics, sweep_csv, trace}) ctx.wrote(p);
}

inline void cmd_compare(const RunConfig& c, const Context& ctx) {
  if (c.compare_models.size() < 2) throw ConfigError("compare.models needs at least two model files");
  const SupervisedSet set = detail::load_supervised(c, ctx);
  std::deque<PreparedData> prepared;  // EvalSet points into these
  std::vector<MetricsReport> reports;
  std::vector<NoiseSweep> sweeps;
  for (const auto& path : c.compare_models) {
    const ModelBundle b = load_model(path);
    prepared.push_back(detail::prepare_with(set, c.split, b));
    const EvalSet es = EvalSet::test_of(prepared.back(), detail::loss_of(b, c.norm).physics);
    reports.push_back(evaluate_variant(b.model, es, b.meta.label));
    sweeps.push_back(noise_sweep(b.model, es, c.noise, b.meta.label));
    ctx.note(b.meta.label + ": test dBH/dt NRMSE " + detail::num(reports.back().dbh_nrmse()) + ", R1+R2 " +
             detail::num(reports.back().r1 + reports.back().r2));
  }
  const auto files = write_comparison(c.out, compare_variants(std::move(reports), std::move(sweeps)));
  for (const auto& p : {files.metrics, files.sweep, files.trace}) ctx.wrote(p);
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Physics-guided neural network forecasting of dB_H/dt", "pgnn"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool verbose = false;
  app.add_option("--config", config_path, "JSON run file")->required();
  app.add_option("--out", out_dir, "Output directory, overrides the run file");
  auto* seed_opt = app.add_option("--seed", seed, "Run seed, overrides the run file");
  app.add_flag("--verbose,-v", verbose, "Extra diagnostics on standard error");

  using Command = void (*)(const RunConfig&, const Context&);
  const std::vector<std::tuple<const char*, const char*, Command>> commands = {
      {"synth", "Generate a synthetic minute series as CSV", cmd_synth},
      {"ingest", "Read a CSV, repair gaps, write supervised tables", cmd_ingest},
      {"train", "Train a standard or physics-guided model", cmd_train},
      {"search", "Grid search lambda or alpha on the validation split", cmd_search},
      {"prune", "Prune and fine-tune a trained model", cmd_prune},
      {"eval", "Evaluate one model on the test split with a noise sweep", cmd_eval},
      {"compare", "Evaluate several models and write comparison tables", cmd_compare}};
  for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfig;
  }

  const Context ctx{err, verbose};
  try {
    RunConfig cfg = load_run_config(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out = out_dir;
    cfg.finalize();
    for (const auto& [name, help, fn] : commands)
      if (app.got_subcommand(name)) fn(cfg, ctx);
    return kOk;
  } catch (const ConfigError& e) {
    err << "pgnn: config error: " << e.what() << '\n';
    return kConfig;
  } catch (const NumericError& e) {
    err << "pgnn: numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const Error& e) {  // data and shape problems
    err << "pgnn: data error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "pgnn: data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "pgnn: internal error: " << e.what() << '\n';
    return kInternal;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv = {"pgnn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace pgnn::cli
