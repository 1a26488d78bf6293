#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ivpvae/cli/trainer.hpp"
#include "ivpvae/model/config.hpp"
#include "ivpvae/seriesdata/synthetic.hpp"

namespace ivpvae::cli {

/// Every setting of a run. Built from defaults, then a config file, then
/// command-line overrides, in that order.
struct RunConfig {
  model::ModelConfig model;
  std::optional<double> alpha;
  train::TrainOptions train;
  data::SyntheticSpec synthetic;
  std::size_t threads = 0;
  std::filesystem::path data = "data.csv";
  std::filesystem::path out = "run";
  std::filesystem::path checkpoint;
  std::string split = "test";
  double input_end = 20.0;
  double time_horizon = 0.0;
  std::vector<double> times;
  std::vector<std::size_t> bench_lengths{10, 50, 100, 200};
  std::size_t bench_batch = 50;
  std::size_t bench_repeats = 5;
  std::vector<solvers::Backend> bench_backends{solvers::Backend::ode_rk4, solvers::Backend::ode_dopri5,
                                               solvers::Backend::resnet_flow};

  RunConfig() { model.D = 1; }

  double effective_alpha() const { return alpha ? *alpha : model::default_alpha(model.task); }

  std::size_t effective_threads() const {
    if (threads > 0) return threads;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }

  /// Model configuration with the run's α filled in.
  model::ModelConfig model_config() const {
    model::ModelConfig c = model;
    c.alpha = effective_alpha();
    c.solver.latent_dim = c.K;
    return c;
  }

  void set(const std::string& key, const std::string& value);
  std::vector<std::string> keys() const;
  io::KeyValueFile to_kv() const;

  void validate() const {
    model_config().validate();
    train.validate();
    synthetic.validate();
    if (!(input_end > 0) || !std::isfinite(input_end)) throw ConfigError("input_end must be a positive number");
    if (!(time_horizon >= 0) || !std::isfinite(time_horizon)) throw ConfigError("time_horizon must be >= 0");
    if (split != "train" && split != "val" && split != "test") {
      throw ConfigError("split must be train, val or test, got '" + split + "'");
    }
    for (double t : times) {
      if (!std::isfinite(t)) throw ConfigError("forecast times must be finite");
    }
    if (bench_batch < 1) throw ConfigError("bench.batch must be >= 1");
    if (bench_repeats < 3) throw ConfigError("bench.repeats must be >= 3");
    for (std::size_t L : bench_lengths) {
      if (L < 1) throw ConfigError("bench.lengths must be positive");
    }
  }
};

namespace detail {

inline double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (!io::parse_double(v, out)) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
  const double d = parse_real(key, v);
  if (d < 0 || d != std::floor(d) || d > 1e15) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(d);
}

inline std::vector<double> parse_reals(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string_view s = io::trim(v);
  while (!s.empty()) {
    const std::size_t comma = s.find(',');
    out.push_back(parse_real(key, std::string(io::trim(s.substr(0, comma)))));
    if (comma == std::string_view::npos) break;
    s = s.substr(comma + 1);
  }
  return out;
}

inline data::Range parse_range(const std::string& key, const std::string& v) {
  const auto r = parse_reals(key, v);
  if (r.size() != 2) throw ConfigError(key + ": expected 'lo,hi', got '" + v + "'");
  return {r[0], r[1]};
}

inline data::CountRange parse_count_range(const std::string& key, const std::string& v) {
  const auto r = parse_reals(key, v);
  if (r.size() != 2 || r[0] < 0 || r[1] < 0 || r[0] != std::floor(r[0]) || r[1] != std::floor(r[1])) {
    throw ConfigError(key + ": expected 'lo,hi' integers, got '" + v + "'");
  }
  return {static_cast<std::size_t>(r[0]), static_cast<std::size_t>(r[1])};
}

inline std::string format_reals(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + io::format_double(v[i]);
  return out;
}

inline std::string format_range(data::Range r) { return io::format_double(r.lo) + "," + io::format_double(r.hi); }
inline std::string format_range(data::CountRange r) { return std::to_string(r.lo) + "," + std::to_string(r.hi); }

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::vector<std::pair<std::string, Field>>& fields() {
  using R = RunConfig;
  using S = const std::string&;
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto real = [&](const char* key, auto member) {
      t.push_back({key, {[member](R& c, S k, S v) { member(c) = parse_real(k, v); },
                         [member](const R& c) { return io::format_double(member(const_cast<R&>(c))); }}});
    };
    auto count = [&](const char* key, auto member) {
      t.push_back({key, {[member](R& c, S k, S v) { member(c) = parse_count(k, v); },
                         [member](const R& c) { return std::to_string(member(const_cast<R&>(c))); }}});
    };
    auto widths = [&](const char* key, auto member) {
      t.push_back({key, {[member](R& c, S k, S v) { member(c) = model::parse_widths(v, k); },
                         [member](const R& c) { return model::format_widths(member(const_cast<R&>(c))); }}});
    };
    auto range = [&](const char* key, auto member) {
      t.push_back({key, {[member](R& c, S k, S v) { member(c) = parse_range(k, v); },
                         [member](const R& c) { return format_range(member(const_cast<R&>(c))); }}});
    };
    auto count_range = [&](const char* key, auto member) {
      t.push_back({key, {[member](R& c, S k, S v) { member(c) = parse_count_range(k, v); },
                         [member](const R& c) { return format_range(member(const_cast<R&>(c))); }}});
    };
    auto path = [&](const char* key, auto member) {
      t.push_back({key, {[member](R& c, S, S v) { member(c) = v; },
                         [member](const R& c) { return member(const_cast<R&>(c)).string(); }}});
    };

    t.push_back({"task", {[](R& c, S, S v) { c.model.task = model::parse_task(v); },
                          [](const R& c) { return model::to_string(c.model.task); }}});
    t.push_back({"backend", {[](R& c, S, S v) { c.model.solver.backend = solvers::parse_backend(v); },
                             [](const R& c) { return solvers::to_string(c.model.solver.backend); }}});
    t.push_back({"alpha", {[](R& c, S k, S v) {
                             if (io::trim(v).empty() || v == "default") c.alpha.reset();
                             else c.alpha = parse_real(k, v);
                           },
                           [](const R& c) { return c.alpha ? io::format_double(*c.alpha) : std::string("default"); }}});
    count("latent_dim", [](R& c) -> std::size_t& { return c.model.K; });
    widths("embed_hidden", [](R& c) -> auto& { return c.model.embed_hidden; });
    widths("recon_hidden", [](R& c) -> auto& { return c.model.recon_hidden; });
    widths("classifier_hidden", [](R& c) -> auto& { return c.model.classifier_hidden; });
    widths("dynamics_hidden", [](R& c) -> auto& { return c.model.solver.hidden; });
    count("flow_layers", [](R& c) -> std::size_t& { return c.model.solver.flow_layers; });
    count("flow_hidden", [](R& c) -> std::size_t& { return c.model.solver.flow_hidden; });
    count("rk4_steps_per_unit", [](R& c) -> std::size_t& { return c.model.solver.rk4_steps_per_unit; });
    real("atol", [](R& c) -> double& { return c.model.solver.atol; });
    real("rtol", [](R& c) -> double& { return c.model.solver.rtol; });

    count("epochs", [](R& c) -> std::size_t& { return c.train.epochs; });
    count("patience", [](R& c) -> std::size_t& { return c.train.patience; });
    count("batch_size", [](R& c) -> std::size_t& { return c.train.batch_size; });
    real("lr", [](R& c) -> double& { return c.train.lr; });
    real("weight_decay", [](R& c) -> double& { return c.train.weight_decay; });
    t.push_back({"lr_step", {[](R& c, S k, S v) { c.train.lr_step = static_cast<int>(parse_count(k, v)); },
                             [](const R& c) { return std::to_string(c.train.lr_step); }}});
    real("lr_decay", [](R& c) -> double& { return c.train.lr_decay; });
    t.push_back({"seed", {[](R& c, S k, S v) {
                            c.train.seed = parse_count(k, v);
                            c.synthetic.seed = c.train.seed;
                          },
                          [](const R& c) { return std::to_string(c.train.seed); }}});
    count("threads", [](R& c) -> std::size_t& { return c.threads; });

    path("data", [](R& c) -> auto& { return c.data; });
    path("out", [](R& c) -> auto& { return c.out; });
    path("checkpoint", [](R& c) -> auto& { return c.checkpoint; });
    t.push_back({"split", {[](R& c, S, S v) { c.split = v; }, [](const R& c) { return c.split; }}});
    real("input_end", [](R& c) -> double& { return c.input_end; });
    real("time_horizon", [](R& c) -> double& { return c.time_horizon; });
    t.push_back({"times", {[](R& c, S k, S v) { c.times = parse_reals(k, v); },
                           [](const R& c) { return format_reals(c.times); }}});

    count("synthetic.n_samples", [](R& c) -> std::size_t& { return c.synthetic.n_samples; });
    range("synthetic.a", [](R& c) -> auto& { return c.synthetic.a; });
    range("synthetic.b", [](R& c) -> auto& { return c.synthetic.b; });
    range("synthetic.c", [](R& c) -> auto& { return c.synthetic.c; });
    range("synthetic.d", [](R& c) -> auto& { return c.synthetic.d; });
    range("synthetic.e", [](R& c) -> auto& { return c.synthetic.e; });
    real("synthetic.noise_std", [](R& c) -> double& { return c.synthetic.noise_std; });
    range("synthetic.input_window", [](R& c) -> auto& { return c.synthetic.input_window; });
    range("synthetic.forecast_window", [](R& c) -> auto& { return c.synthetic.forecast_window; });
    count_range("synthetic.input_points", [](R& c) -> auto& { return c.synthetic.input_points; });
    count_range("synthetic.forecast_points", [](R& c) -> auto& { return c.synthetic.forecast_points; });

    t.push_back({"bench.lengths", {[](R& c, S k, S v) { c.bench_lengths = model::parse_widths(v, k); },
                                   [](const R& c) { return model::format_widths(c.bench_lengths); }}});
    count("bench.batch", [](R& c) -> std::size_t& { return c.bench_batch; });
    count("bench.repeats", [](R& c) -> std::size_t& { return c.bench_repeats; });
    t.push_back({"bench.backends", {[](R& c, S, S v) {
                                      c.bench_backends.clear();
                                      std::string_view s = io::trim(v);
                                      while (!s.empty()) {
                                        const std::size_t comma = s.find(',');
                                        c.bench_backends.push_back(solvers::parse_backend(io::trim(s.substr(0, comma))));
                                        if (comma == std::string_view::npos) break;
                                        s = s.substr(comma + 1);
                                      }
                                    },
                                    [](const R& c) {
                                      std::string out;
                                      for (std::size_t i = 0; i < c.bench_backends.size(); ++i)
                                        out += (i ? "," : "") + solvers::to_string(c.bench_backends[i]);
                                      return out;
                                    }}});
    return t;
  }();
  return table;
}

}  // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& [k, f] : detail::fields()) {
    if (k == key) {
      f.set(*this, key, std::string(io::trim(value)));
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

inline std::vector<std::string> RunConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, f] : detail::fields()) out.push_back(k);
  return out;
}

inline io::KeyValueFile RunConfig::to_kv() const {
  io::KeyValueFile kv;
  for (const auto& [k, f] : detail::fields()) kv.set(k, f.get(*this));
  return kv;
}

/// Applies every entry of a key=value file; errors carry the file name.
inline void apply_file(RunConfig& cfg, const std::filesystem::path& path) {
  const auto kv = io::KeyValueFile::load(path);
  for (const auto& [k, v] : kv.entries()) {
    try {
      cfg.set(k, v);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
}

/// `key=value` as given to --set.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  cfg.set(std::string(io::trim(assignment.substr(0, eq))), assignment.substr(eq + 1));
}

}  // namespace ivpvae::cli
