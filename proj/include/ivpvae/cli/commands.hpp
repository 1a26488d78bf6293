#pragma once

#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "ivpvae/cli/run_config.hpp"
#include "ivpvae/evalbench/bench.hpp"
#include "ivpvae/model/checkpoint.hpp"
#include "ivpvae/seriesdata/csv.hpp"
#include "ivpvae/seriesdata/split.hpp"

namespace ivpvae::cli {

namespace fs = std::filesystem;

inline fs::path checkpoint_path(const RunConfig& cfg) {
  return cfg.checkpoint.empty() ? cfg.out / "model.ckpt" : cfg.checkpoint;
}

/// Dataset plus its manifest; a CSV without a sidecar gets a manifest
/// describing its own columns.
struct LoadedData {
  data::Dataset dataset;
  data::Manifest manifest;
};

inline LoadedData load_dataset(const fs::path& path) {
  LoadedData d;
  d.dataset = data::load_csv(path);
  const fs::path mpath = data::manifest_path_for(path);
  if (fs::exists(mpath)) {
    d.manifest = data::Manifest::load(mpath);
    const auto diff = data::variable_mismatches(d.manifest.variables, d.dataset.variables);
    if (!diff.empty()) throw DataError(path.string() + " does not match its manifest: " + diff.front());
  } else {
    d.manifest.variables = d.dataset.variables;
  }
  return d;
}

inline void require_compatible(const data::Manifest& trained, const data::Dataset& ds, const fs::path& path) {
  const auto diff = data::variable_mismatches(trained.variables, ds.variables);
  if (diff.empty()) return;
  std::string msg = path.string() + ": variables do not match the checkpoint:";
  for (const auto& d : diff) msg += "\n  " + d;
  throw DataError(msg);
}

// generate --------------------------------------------------------------

struct GenerateResult {
  fs::path csv;
  fs::path manifest;
  std::size_t n_series = 0;
};

inline GenerateResult cmd_generate(const RunConfig& cfg) {
  cfg.validate();
  const auto samples = data::generate_synthetic(cfg.synthetic);
  const data::Dataset ds = data::to_dataset(samples);
  data::Manifest m;
  m.variables = ds.variables;
  m.attributes = {{"generator", "synthetic"},
                  {"seed", std::to_string(cfg.synthetic.seed)},
                  {"n_samples", std::to_string(cfg.synthetic.n_samples)},
                  {"noise_std", io::format_double(cfg.synthetic.noise_std)},
                  {"input_window", detail::format_range(cfg.synthetic.input_window)},
                  {"forecast_window", detail::format_range(cfg.synthetic.forecast_window)}};
  if (!cfg.data.parent_path().empty()) fs::create_directories(cfg.data.parent_path());
  data::save_csv(ds, cfg.data);
  m.save(data::manifest_path_for(cfg.data));
  return {cfg.data, data::manifest_path_for(cfg.data), ds.size()};
}

// shared data preparation -------------------------------------------------

struct PreparedSplits {
  data::NormStats norm;
  double boundary = 0.0;
  model::TaskData train, val, test;

  const model::TaskData& get(const std::string& split) const {
    if (split == "train") return train;
    if (split == "val") return val;
    return test;
  }
};

inline double max_time(const data::Dataset& ds) {
  double t = 0.0;
  for (const auto& s : ds.series)
    for (double ti : s.times) t = std::max(t, ti);
  return t;
}

/// Split with `split_seed`, normalize with `norm` (computed on the training
/// part when absent) and cut the forecast windows at `input_end`. Series are
/// ordered by id first, so the CSV row order never matters.
inline PreparedSplits prepare_splits(const data::Dataset& ds, model::Task task, std::uint64_t split_seed,
                                     double input_end, double time_horizon, const std::optional<data::NormStats>& norm) {
  data::Dataset sorted = ds;
  std::stable_sort(sorted.series.begin(), sorted.series.end(),
                   [](const auto& a, const auto& b) { return a.series_id < b.series_id; });
  const data::DatasetSplit parts = data::split(sorted, split_seed);
  PreparedSplits p;
  if (norm) {
    p.norm = *norm;
  } else {
    const double horizon = time_horizon > 0 ? time_horizon : std::max(1.0, max_time(parts.train));
    p.norm = data::compute_norm(parts.train, horizon);
  }
  p.boundary = input_end / p.norm.horizon;
  p.train = model::prepare_task_data(data::apply_norm(parts.train, p.norm), task, p.boundary);
  p.val = model::prepare_task_data(data::apply_norm(parts.val, p.norm), task, p.boundary);
  p.test = model::prepare_task_data(data::apply_norm(parts.test, p.norm), task, p.boundary);
  return p;
}

/// Round-trip error of the solver on fixed random states, in normalized time.
inline double solver_roundtrip(const model::IvpVae& m, const diff::ParamStore& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t n = 100, K = m.config().K;
  diff::Tensor z(diff::Shape{n, K});
  std::vector<double> dt(n);
  for (double& v : z.data()) v = u(rng);
  for (double& v : dt) v = u(rng);
  return solvers::roundtrip_error(m.solver(), params, z, dt);
}

// train -----------------------------------------------------------------

struct TrainSummary {
  train::TrainResult result;
  fs::path checkpoint;
  fs::path log;
  double roundtrip_before = 0.0;
  double roundtrip_after = 0.0;
  eval::Evaluation test;
};

inline TrainSummary cmd_train(const RunConfig& cfg, const train::EpochCallback& on_epoch = {}) {
  cfg.validate();
  diff::set_num_threads(cfg.effective_threads());
  const LoadedData loaded = load_dataset(cfg.data);
  model::ModelConfig mc = cfg.model_config();
  mc.D = loaded.dataset.num_vars();
  mc.validate();
  const PreparedSplits splits =
      prepare_splits(loaded.dataset, mc.task, cfg.train.seed, cfg.input_end, cfg.time_horizon, std::nullopt);

  data::Manifest manifest = loaded.manifest;
  manifest.norm = splits.norm;
  model::ModelBundle bundle = model::ModelBundle::create(mc, manifest, cfg.train.seed);
  bundle.meta.set("split_seed", std::to_string(cfg.train.seed));
  bundle.meta.set("input_end", io::format_hex(cfg.input_end));
  bundle.meta.set("dataset", cfg.data.string());

  TrainSummary summary;
  summary.roundtrip_before = solver_roundtrip(bundle.model, *bundle.params, cfg.train.seed);
  fs::create_directories(cfg.out);
  summary.log = cfg.out / "train_log.csv";
  summary.checkpoint = cfg.out / "model.ckpt";
  std::string log = train::log_header();
  auto record = [&](const train::EpochRecord& r) {
    log += train::log_row(r);
    io::atomic_write(summary.log, log);
    if (on_epoch) on_epoch(r);
  };
  summary.result = train::fit(bundle.model, *bundle.params, splits.train, splits.val, cfg.train, record);
  summary.roundtrip_after = solver_roundtrip(bundle.model, *bundle.params, cfg.train.seed);

  const std::string metric = train::selection_metric_name(mc.task);
  bundle.meta.set("best_epoch", std::to_string(summary.result.best_epoch));
  bundle.meta.set("best_val_" + metric, io::format_hex(summary.result.best_metric));
  bundle.meta.set("epochs_run", std::to_string(summary.result.epochs_run));
  bundle.meta.set("roundtrip_before", io::format_double(summary.roundtrip_before));
  bundle.meta.set("roundtrip_after", io::format_double(summary.roundtrip_after));
  model::save_checkpoint(bundle, summary.checkpoint);
  io::atomic_write(cfg.out / "val_metrics.txt", summary.result.best_validation.metrics.to_kv().str());
  summary.test = eval::evaluate(bundle.model, *bundle.params, splits.test, cfg.train.batch_size);
  io::atomic_write(cfg.out / "test_metrics.txt", summary.test.metrics.to_kv().str());
  return summary;
}

// evaluate ----------------------------------------------------------------

inline double meta_hex(const model::ModelBundle& b, const std::string& key) {
  double v = 0.0;
  if (!b.meta.contains(key) || !io::parse_hex(b.meta.get(key), v)) throw DataError("checkpoint lacks '" + key + "'");
  return v;
}

inline std::uint64_t meta_count(const model::ModelBundle& b, const std::string& key) {
  if (!b.meta.contains(key)) throw DataError("checkpoint lacks '" + key + "'");
  return std::stoull(b.meta.get(key));
}

inline eval::Evaluation cmd_evaluate(const RunConfig& cfg) {
  cfg.validate();
  diff::set_num_threads(cfg.effective_threads());
  const model::ModelBundle bundle = model::load_checkpoint(checkpoint_path(cfg));
  const LoadedData loaded = load_dataset(cfg.data);
  require_compatible(bundle.manifest, loaded.dataset, cfg.data);
  if (!bundle.manifest.norm) throw DataError("checkpoint carries no normalization");
  const PreparedSplits splits = prepare_splits(loaded.dataset, bundle.config.task, meta_count(bundle, "split_seed"),
                                               meta_hex(bundle, "input_end"), 0.0, bundle.manifest.norm);
  const auto ev = eval::evaluate(bundle.model, *bundle.params, splits.get(cfg.split), cfg.train.batch_size);
  fs::create_directories(cfg.out);
  io::atomic_write(cfg.out / ("metrics_" + cfg.split + ".txt"), ev.metrics.to_kv().str());
  return ev;
}

// forecast ----------------------------------------------------------------

struct ForecastResult {
  fs::path csv;
  std::size_t rows = 0;
};

/// Every observation in the CSV acts as input; predictions are written in
/// original units as series_id,time,variable,value.
inline ForecastResult cmd_forecast(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.times.empty()) throw ConfigError("forecast needs at least one time (times=t1,t2,...)");
  diff::set_num_threads(cfg.effective_threads());
  const model::ModelBundle bundle = model::load_checkpoint(checkpoint_path(cfg));
  const LoadedData loaded = load_dataset(cfg.data);
  require_compatible(bundle.manifest, loaded.dataset, cfg.data);
  if (!bundle.manifest.norm) throw DataError("checkpoint carries no normalization");
  const data::NormStats& norm = *bundle.manifest.norm;
  const data::Dataset ds = data::apply_norm(loaded.dataset, norm);
  std::vector<double> t;
  for (double ti : cfg.times) t.push_back(ti / norm.horizon);
  const auto pred = eval::predict(bundle.model, *bundle.params, ds.series, t, cfg.train.batch_size);
  const std::size_t D = ds.num_vars();
  std::string out = "series_id,time,variable,value\n";
  std::size_t rows = 0;
  for (std::size_t s = 0; s < ds.size(); ++s)
    for (std::size_t j = 0; j < t.size(); ++j)
      for (std::size_t d = 0; d < D; ++d, ++rows) {
        out += ds.series[s].series_id + "," + io::format_double(cfg.times[j]) + "," + ds.variables[d] + "," +
               io::format_double(norm.denormalize(d, pred[s][j * D + d])) + "\n";
      }
  fs::create_directories(cfg.out);
  const fs::path path = cfg.out / "forecast.csv";
  io::atomic_write(path, out);
  return {path, rows};
}

// bench -------------------------------------------------------------------

inline std::vector<eval::BenchReport> cmd_bench(const RunConfig& cfg,
                                                const std::function<void(const eval::BenchReport&)>& on_row = {}) {
  cfg.validate();
  std::vector<eval::BenchReport> rows;
  for (solvers::Backend backend : cfg.bench_backends) {
    model::ModelConfig mc = cfg.model_config();
    mc.solver.backend = backend;
    mc.validate();
    diff::ParamStore params(cfg.train.seed);
    const model::IvpVae m(params, mc);
    for (std::size_t L : cfg.bench_lengths) {
      rows.push_back(eval::bench_encoder(m, params, L, cfg.bench_batch, cfg.bench_repeats, cfg.effective_threads(),
                                         cfg.train.seed));
      if (on_row) on_row(rows.back());
    }
  }
  std::string csv = eval::BenchReport::csv_header() + "\n";
  for (const auto& r : rows) csv += r.csv_row() + "\n";
  fs::create_directories(cfg.out);
  io::atomic_write(cfg.out / "bench.csv", csv);
  return rows;
}

}  // namespace ivpvae::cli
