#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "ivpvae/diffcore/ops.hpp"

namespace ivpvae::objectives {

using diff::Tensor;
using diff::Var;

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // ½ ln 2π
inline constexpr double kProbClamp = 1e-7;

/// Scalar loss components, with total = −recon_ll + kl_avg + α·task_term.
struct LossReport {
  double total = 0.0;
  double recon_ll = 0.0;
  double kl_avg = 0.0;
  double task_term = 0.0;
  std::size_t n_observed = 0;
};

/// KL(N(μ, diag σ²) ‖ N(0, I)) per row: ½ Σ_k (μ² + σ² − 1 − ln σ²). [M x 1].
inline Var kl_diag_gauss(const Var& mu, const Var& sigma) {
  const Var terms = diff::square(mu) + diff::square(sigma) - 1.0 - 2.0 * diff::log(sigma);
  return 0.5 * diff::rowwise_sum(terms);
}

inline double kl_diag_gauss(const std::vector<double>& mu, const std::vector<double>& sigma) {
  if (mu.size() != sigma.size()) throw ContractError("kl_diag_gauss: mu and sigma lengths differ");
  double kl = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    if (!(sigma[k] > 0)) throw ContractError("kl_diag_gauss: sigma must be positive");
    kl += mu[k] * mu[k] + sigma[k] * sigma[k] - 1.0 - std::log(sigma[k] * sigma[k]);
  }
  return 0.5 * kl;
}

/// Unit-variance Gaussian log-likelihood of each observed entry,
/// −½(x̂ − x)² − ½ ln 2π, and 0 where mask is 0. Same shape as x̂.
inline Var recon_loglik_entries(const Var& xhat, const Tensor& x, const Tensor& mask) {
  if (xhat.shape() != x.shape() || x.shape() != mask.shape()) {
    throw ContractError("recon_loglik: shapes " + diff::to_string(xhat.shape()) + ", " + diff::to_string(x.shape()) +
                        " and " + diff::to_string(mask.shape()) + " differ");
  }
  const Var m = diff::constant(mask);
  const Var r = (xhat - diff::constant(x)) * m;
  return -0.5 * diff::square(r) - kHalfLog2Pi * m;
}

inline Var recon_loglik(const Var& xhat, const Tensor& x, const Tensor& mask) {
  return diff::sum(recon_loglik_entries(xhat, x, mask));
}

/// Masked squared residuals, for forecast losses and metrics.
inline Var masked_sq_error(const Var& xhat, const Tensor& x, const Tensor& mask) {
  if (xhat.shape() != x.shape() || x.shape() != mask.shape()) {
    throw ContractError("masked_sq_error: shapes " + diff::to_string(xhat.shape()) + ", " +
                        diff::to_string(x.shape()) + " and " + diff::to_string(mask.shape()) + " differ");
  }
  return diff::square((xhat - diff::constant(x)) * diff::constant(mask));
}

/// Mean squared error over observed entries; no observed entry is an error.
inline Var forecast_mse(const Var& xhat, const Tensor& x, const Tensor& mask) {
  double n = 0.0;
  for (double m : mask.data()) n += m;
  if (n == 0.0) throw DataError("forecast loss: no observed forecast entries to supervise");
  return diff::sum(masked_sq_error(xhat, x, mask)) * (1.0 / n);
}

/// Binary cross-entropy with p clamped to [1e-7, 1 − 1e-7]; y is a column of
/// 0/1 targets matching p.
inline Var cross_entropy(const Var& p, const Tensor& y) {
  if (p.shape() != y.shape()) throw ContractError("cross_entropy: prediction and label shapes differ");
  const Var pc = diff::clamp(p, kProbClamp, 1.0 - kProbClamp);
  const Var yv = diff::constant(y);
  return -(yv * diff::log(pc) + (1.0 - yv) * diff::log(1.0 - pc));
}

inline double cross_entropy(double p, int y) {
  p = std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
  return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

/// vae = −recon_ll + kl_avg; the task term is added with weight α.
inline LossReport combine(double recon_ll, double kl_avg, double task_term, double alpha, std::size_t n_observed) {
  if (alpha < 0) throw ContractError("alpha must be >= 0");
  LossReport r;
  r.recon_ll = recon_ll;
  r.kl_avg = kl_avg;
  r.task_term = task_term;
  r.n_observed = n_observed;
  r.total = -recon_ll + kl_avg + alpha * task_term;
  return r;
}

}  // namespace ivpvae::objectives
