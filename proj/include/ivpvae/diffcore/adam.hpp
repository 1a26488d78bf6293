#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ivpvae/diffcore/param_store.hpp"

namespace ivpvae::diff {

/// Adam with decoupled weight decay. Moment buffers mirror the store layout.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  AdamState() = default;
  explicit AdamState(const ParamStore& params, double lr_ = 1e-3, double weight_decay_ = 1e-4)
      : lr(lr_), weight_decay(weight_decay_) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m.emplace_back(params.value(i).size(), 0.0);
      v.emplace_back(params.value(i).size(), 0.0);
    }
  }
};

/// One update. The decay term shrinks parameters before the adaptive step:
///   θ ← θ − lr·wd·θ;  θ ← θ − lr·m̂/(√v̂ + eps).
inline void adam_step(ParamStore& params, AdamState& state) {
  if (state.m.size() != params.size()) throw ContractError("Adam state does not match parameter store");
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (double g : params.grad(i).data()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient for parameter '" + params.name(i) + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params.value(i).data();
    auto g = params.grad(i).data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (state.weight_decay != 0.0) w[k] -= state.lr * state.weight_decay * w[k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      w[k] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

/// Step decay: base · decay^⌊epoch / step⌋.
inline double lr_schedule(int epoch, double base_lr, int step = 20, double decay = 0.5) {
  if (epoch < 0) throw ContractError("epoch must be non-negative");
  return base_lr * std::pow(decay, epoch / step);
}

}  // namespace ivpvae::diff
