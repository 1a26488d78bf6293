#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ivpvae/solvers/solver_spec.hpp"
#include "ivpvae/util/kvfile.hpp"

namespace ivpvae::model {

enum class Task { forecast, classify, unsupervised };

inline std::string to_string(Task t) {
  switch (t) {
    case Task::forecast: return "forecast";
    case Task::classify: return "classify";
    case Task::unsupervised: return "unsupervised";
  }
  return "?";
}

inline Task parse_task(std::string_view s) {
  if (s == "forecast") return Task::forecast;
  if (s == "classify") return Task::classify;
  if (s == "unsupervised") return Task::unsupervised;
  throw ConfigError("unknown task '" + std::string(s) + "' (expected forecast, classify or unsupervised)");
}

/// Weight of the supervised term when none is configured.
inline double default_alpha(Task t) {
  switch (t) {
    case Task::forecast: return 1.0;
    case Task::classify: return 100.0;
    case Task::unsupervised: return 0.0;
  }
  return 0.0;
}

inline std::string format_widths(const std::vector<std::size_t>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) out += (i ? "," : "") + std::to_string(w[i]);
  return out;
}

inline std::vector<std::size_t> parse_widths(std::string_view s, const std::string& key) {
  std::vector<std::size_t> out;
  s = io::trim(s);
  if (s.empty()) return out;
  while (true) {
    const std::size_t comma = s.find(',');
    const std::string_view item = io::trim(s.substr(0, comma));
    double v = 0.0;
    if (!io::parse_double(item, v) || v < 1 || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw ConfigError(key + ": expected a comma-separated list of positive integers, got '" + std::string(s) + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
    if (comma == std::string_view::npos) break;
    s = s.substr(comma + 1);
  }
  return out;
}

struct ModelConfig {
  std::size_t D = 1;
  std::size_t K = 20;
  std::vector<std::size_t> embed_hidden{64};
  std::vector<std::size_t> recon_hidden{64};
  std::vector<std::size_t> classifier_hidden{64};
  solvers::SolverSpec solver;
  double alpha = 1.0;
  Task task = Task::forecast;

  void validate() const {
    if (D < 1) throw ConfigError("model D must be >= 1");
    if (K < 1) throw ConfigError("latent_dim must be >= 1");
    if (!(alpha >= 0) || !std::isfinite(alpha)) throw ConfigError("alpha must be a finite number >= 0");
    if (solver.latent_dim != K) throw ConfigError("solver latent_dim must equal the model latent_dim");
    solver.validate();
  }

  io::KeyValueFile to_kv() const {
    io::KeyValueFile kv;
    kv.set("D", std::to_string(D));
    kv.set("latent_dim", std::to_string(K));
    kv.set("embed_hidden", format_widths(embed_hidden));
    kv.set("recon_hidden", format_widths(recon_hidden));
    kv.set("classifier_hidden", format_widths(classifier_hidden));
    kv.set("backend", solvers::to_string(solver.backend));
    kv.set("dynamics_hidden", format_widths(solver.hidden));
    kv.set("flow_layers", std::to_string(solver.flow_layers));
    kv.set("flow_hidden", std::to_string(solver.flow_hidden));
    kv.set("rk4_steps_per_unit", std::to_string(solver.rk4_steps_per_unit));
    kv.set("atol", io::format_hex(solver.atol));
    kv.set("rtol", io::format_hex(solver.rtol));
    kv.set("alpha", io::format_hex(alpha));
    kv.set("task", to_string(task));
    return kv;
  }

  static ModelConfig from_kv(const io::KeyValueFile& kv) {
    auto count = [&](const char* key) {
      const auto w = parse_widths(kv.get(key), key);
      if (w.size() != 1) throw DataError(std::string("checkpoint key '") + key + "' must hold one integer");
      return w[0];
    };
    auto hex = [&](const char* key) {
      double v = 0.0;
      if (!io::parse_hex(kv.get(key), v)) throw DataError(std::string("checkpoint key '") + key + "' is malformed");
      return v;
    };
    ModelConfig c;
    c.D = count("D");
    c.K = count("latent_dim");
    c.embed_hidden = parse_widths(kv.get("embed_hidden"), "embed_hidden");
    c.recon_hidden = parse_widths(kv.get("recon_hidden"), "recon_hidden");
    c.classifier_hidden = parse_widths(kv.get("classifier_hidden"), "classifier_hidden");
    c.solver.backend = solvers::parse_backend(kv.get("backend"));
    c.solver.latent_dim = c.K;
    c.solver.hidden = parse_widths(kv.get("dynamics_hidden"), "dynamics_hidden");
    c.solver.flow_layers = count("flow_layers");
    c.solver.flow_hidden = count("flow_hidden");
    c.solver.rk4_steps_per_unit = count("rk4_steps_per_unit");
    c.solver.atol = hex("atol");
    c.solver.rtol = hex("rtol");
    c.alpha = hex("alpha");
    c.task = parse_task(kv.get("task"));
    c.validate();
    return c;
  }

  bool operator==(const ModelConfig& o) const { return to_kv().str() == o.to_kv().str(); }
};

}  // namespace ivpvae::model
