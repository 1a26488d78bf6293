#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ivpvae/errors.hpp"

namespace ivpvae::solvers {

enum class Backend { ode_rk4, ode_dopri5, resnet_flow };

inline std::string to_string(Backend b) {
  switch (b) {
    case Backend::ode_rk4: return "rk4";
    case Backend::ode_dopri5: return "dopri5";
    case Backend::resnet_flow: return "flow";
  }
  return "?";
}

inline Backend parse_backend(std::string_view s) {
  if (s == "rk4" || s == "ode_rk4") return Backend::ode_rk4;
  if (s == "dopri5" || s == "ode_dopri5") return Backend::ode_dopri5;
  if (s == "flow" || s == "resnet_flow") return Backend::resnet_flow;
  throw ConfigError("unknown solver backend '" + std::string(s) + "' (expected rk4, dopri5 or flow)");
}

inline bool is_ode(Backend b) { return b != Backend::resnet_flow; }

struct SolverSpec {
  Backend backend = Backend::resnet_flow;
  std::size_t latent_dim = 20;
  /// Hidden widths of the ODE dynamics net f(t, z).
  std::vector<std::size_t> hidden{64};
  std::size_t flow_layers = 2;
  /// Hidden width of each flow layer's residual net g.
  std::size_t flow_hidden = 64;
  std::size_t rk4_steps_per_unit = 20;
  double atol = 1e-5;
  double rtol = 1e-5;

  void validate() const {
    if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
    if (backend == Backend::resnet_flow && flow_layers < 1) throw ConfigError("flow_layers must be >= 1");
    if (backend == Backend::resnet_flow && flow_hidden < 1) throw ConfigError("flow_hidden must be >= 1");
    if (rk4_steps_per_unit < 1) throw ConfigError("rk4_steps_per_unit must be >= 1");
    if (!(atol > 0) || !(rtol > 0)) throw ConfigError("dopri5 atol and rtol must be > 0");
    for (std::size_t h : hidden) {
      if (h < 1) throw ConfigError("dynamics hidden widths must be >= 1");
    }
  }
};

}  // namespace ivpvae::solvers
