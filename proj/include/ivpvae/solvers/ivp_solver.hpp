#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ivpvae/diffcore/mlp.hpp"
#include "ivpvae/solvers/integrators.hpp"
#include "ivpvae/solvers/solver_spec.hpp"

namespace ivpvae::solvers {

/// Learned vector field f(t, z): an MLP on [z, t] (width K+1) with tanh
/// hidden layers and a linear K-wide output.
struct DynamicsNet {
  diff::Mlp net;

  static DynamicsNet create(diff::ParamStore& store, const std::string& prefix, std::size_t latent_dim,
                            const std::vector<std::size_t>& hidden) {
    std::vector<std::size_t> widths{latent_dim + 1};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(latent_dim);
    return {diff::Mlp::create(store, prefix, widths)};
  }

  Var operator()(diff::Bindings& b, const Var& t, const Var& z) const {
    return net(b, diff::concat_cols({z, t}));
  }
};

/// ResNet flow: a stack of time-gated residual layers
///   z ← z + tanh(s ⊙ Δt) ⊙ g([z, Δt]),   s = exp(log_scale) > 0,
/// where g has one tanh hidden layer and a zero-initialized output layer.
/// The gate vanishes at Δt = 0, so the map is exactly the identity there.
struct FlowNet {
  struct Layer {
    std::size_t log_scale;
    diff::Mlp g;
  };
  std::vector<Layer> layers;

  static FlowNet create(diff::ParamStore& store, const std::string& prefix, std::size_t latent_dim,
                        std::size_t n_layers, std::size_t hidden) {
    FlowNet f;
    for (std::size_t l = 0; l < n_layers; ++l) {
      const std::string base = prefix + ".layer" + std::to_string(l);
      Layer layer;
      layer.log_scale = store.add_zeros(base + ".log_scale", {latent_dim});
      layer.g = diff::Mlp::create(store, base + ".g", {latent_dim + 1, hidden, latent_dim}, true);
      f.layers.push_back(std::move(layer));
    }
    return f;
  }

  /// dt is a per-row column [N x 1].
  Var forward(diff::Bindings& b, const Var& z0, const Var& dt) const {
    Var z = z0;
    for (const auto& layer : layers) {
      const Var gate = diff::tanh(dt * diff::exp(b(layer.log_scale)));
      z = z + gate * layer.g(b, diff::concat_cols({z, dt}));
    }
    return z;
  }
};

/// The shared IVP solver of the model: maps (z, Δt) → z′ row by row under
/// one learned dynamics, either by integrating a neural ODE or by
/// evaluating a neural flow.
class IvpSolver {
 public:
  IvpSolver() = default;

  IvpSolver(diff::ParamStore& store, SolverSpec spec, const std::string& prefix = "solver")
      : spec_(std::move(spec)) {
    spec_.validate();
    if (is_ode(spec_.backend)) {
      dynamics_ = DynamicsNet::create(store, prefix + ".dynamics", spec_.latent_dim, spec_.hidden);
    } else {
      flow_ = FlowNet::create(store, prefix + ".flow", spec_.latent_dim, spec_.flow_layers, spec_.flow_hidden);
    }
  }

  const SolverSpec& spec() const { return spec_; }
  const DynamicsNet& dynamics() const { return dynamics_; }
  const FlowNet& flow() const { return flow_; }

  /// Evolves each row of z [M x K] by dt[m] starting at absolute time
  /// t_start[m]; both are [M x 1] columns. The flow backend depends on dt
  /// only.
  Var solve(diff::Bindings& b, const Var& z, const Var& dt, const Var& t_start) const {
    if (z.cols() != spec_.latent_dim) {
      throw ContractError("ivp_solve: state width " + std::to_string(z.cols()) + " != latent_dim " +
                          std::to_string(spec_.latent_dim));
    }
    detail::check_column(dt, z.rows(), "ivp_solve dt");
    detail::check_column(t_start, z.rows(), "ivp_solve t_start");
    auto f = [&](const Var& t, const Var& state) { return dynamics_(b, t, state); };
    Var out;
    switch (spec_.backend) {
      case Backend::ode_rk4: out = rk4_integrate(f, z, dt, t_start, spec_.rk4_steps_per_unit); break;
      case Backend::ode_dopri5: {
        Dopri5Options opt;
        opt.atol = spec_.atol;
        opt.rtol = spec_.rtol;
        out = dopri5_integrate(f, z, dt, t_start, opt);
        break;
      }
      case Backend::resnet_flow: out = flow_.forward(b, z, dt); break;
    }
    detail::check_rows_finite(out, "ivp_solve");
    return out;
  }

  Var solve(diff::Bindings& b, const Var& z, const Var& dt) const {
    return solve(b, z, dt, diff::constant(Tensor(diff::Shape{z.rows(), 1})));
  }

 private:
  SolverSpec spec_;
  DynamicsNet dynamics_;
  FlowNet flow_;
};

/// ‖solve(solve(z, Δt), −Δt) − z‖∞ with the return trip starting at Δt.
inline double roundtrip_error(const IvpSolver& solver, const diff::ParamStore& params, const Tensor& z,
                              const std::vector<double>& dt) {
  diff::Bindings b(params, nullptr);
  const Var dtv = diff::constant(Tensor::column(dt));
  const Var there = solver.solve(b, diff::constant(z), dtv);
  const Var back = solver.solve(b, there, -dtv, dtv);
  double worst = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) worst = std::max(worst, std::abs(back.value()[i] - z[i]));
  return worst;
}

}  // namespace ivpvae::solvers
