#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "ivpvae/diffcore/ops.hpp"

// Batched explicit integrators for dz/dt = f(t, z). Every row is an
// independent IVP with its own start time and signed duration; a row's
// trajectory (step count, step sizes, arithmetic) depends only on that row,
// so solving a batch equals solving its rows one at a time.
//
// The dynamics callable has the form Var f(const Var& t, const Var& z)
// where t is [N x 1] and z is [N x K].

namespace ivpvae::solvers {

using diff::Tensor;
using diff::Var;

namespace detail {

inline std::vector<std::size_t> rows_where(const std::vector<char>& flags) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < flags.size(); ++i)
    if (flags[i]) idx.push_back(i);
  return idx;
}

inline Var column_constant(const std::vector<double>& v) { return diff::constant(Tensor::column(v)); }

inline void check_rows_finite(const Var& z, const char* what) {
  const std::size_t K = z.cols();
  const auto d = z.value().data();
  for (std::size_t r = 0; r < z.rows(); ++r) {
    for (std::size_t k = 0; k < K; ++k) {
      if (!std::isfinite(d[r * K + k])) {
        throw NumericError(std::string(what) + ": non-finite state in row " + std::to_string(r));
      }
    }
  }
}

inline void check_column(const Var& v, std::size_t rows, const char* what) {
  if (v.cols() != 1 || v.rows() != rows) {
    throw ContractError(std::string(what) + ": expected a [" + std::to_string(rows) + "x1] column, got " +
                        diff::to_string(v.shape()));
  }
}

}  // namespace detail

/// One classical Runge–Kutta step; h is a per-row column (sign = direction).
template <class F>
Var rk4_step(F&& f, const Var& t, const Var& z, const Var& h) {
  const Var t_half = t + 0.5 * h;
  const Var k1 = f(t, z);
  const Var k2 = f(t_half, diff::row_axpy(z, h, k1, 0.5));
  const Var k3 = f(t_half, diff::row_axpy(z, h, k2, 0.5));
  const Var k4 = f(t + h, diff::row_axpy(z, h, k3, 1.0));
  return diff::row_axpy(z, h, diff::linear_combination({k1, k2, k3, k4}, {1.0, 2.0, 2.0, 1.0}), 1.0 / 6.0);
}

/// Fixed-step RK4 over |dt_m| with ceil(|dt_m|·steps_per_unit) equal steps
/// per row (none when dt_m = 0). Rows that have finished are left out of
/// later steps.
template <class F>
Var rk4_integrate(F&& f, const Var& z0, const Var& dt, const Var& t_start, std::size_t steps_per_unit) {
  const std::size_t N = z0.rows();
  detail::check_column(dt, N, "rk4_integrate dt");
  detail::check_column(t_start, N, "rk4_integrate t_start");
  if (steps_per_unit < 1) throw ContractError("rk4 steps_per_unit must be >= 1");
  std::vector<std::size_t> n_steps(N);
  std::vector<double> inv(N);
  std::size_t max_steps = 0;
  for (std::size_t m = 0; m < N; ++m) {
    const double span = std::abs(dt.value()[m]);
    if (!std::isfinite(span)) throw NumericError("rk4_integrate: non-finite dt in row " + std::to_string(m));
    n_steps[m] = span == 0.0 ? 0 : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span * steps_per_unit)));
    inv[m] = n_steps[m] == 0 ? 0.0 : 1.0 / static_cast<double>(n_steps[m]);
    max_steps = std::max(max_steps, n_steps[m]);
  }
  if (max_steps == 0) return z0;
  const Var h = dt * detail::column_constant(inv);
  Var z = z0;
  Var t = t_start;
  for (std::size_t s = 0; s < max_steps; ++s) {
    std::vector<char> active(N);
    for (std::size_t m = 0; m < N; ++m) active[m] = n_steps[m] > s;
    const auto idx = detail::rows_where(active);
    if (idx.size() == N) {
      z = rk4_step(f, t, z, h);
      t = t + h;
    } else {
      const Var ha = diff::gather_rows(h, idx);
      const Var ta = diff::gather_rows(t, idx);
      z = diff::scatter_rows(z, idx, rk4_step(f, ta, diff::gather_rows(z, idx), ha));
      t = diff::scatter_rows(t, idx, ta + ha);
    }
  }
  detail::check_rows_finite(z, "rk4_integrate");
  return z;
}

struct Dopri5Options {
  double atol = 1e-5;
  double rtol = 1e-5;
  /// Initial step as a fraction of |dt|.
  double first_step = 0.01;
  double safety = 0.9;
  double fac_min = 0.2;
  double fac_max = 10.0;
  double beta = 0.04;
  std::size_t max_steps = 100000;
};

/// Dormand–Prince 5(4) with PI step-size control, per row from t_start to
/// t_start + dt (dt may be negative). A step is accepted when every
/// component of the embedded error estimate is within atol + rtol·|z|.
/// Step sizes are treated as constants for differentiation, except that the
/// final step of each row depends on dt and t_start.
template <class F>
Var dopri5_integrate(F&& f, const Var& z0, const Var& dt, const Var& t_start, const Dopri5Options& opt = {}) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  const std::size_t N = z0.rows(), K = z0.cols();
  detail::check_column(dt, N, "dopri5_integrate dt");
  detail::check_column(t_start, N, "dopri5_integrate t_start");
  if (!(opt.atol > 0) || !(opt.rtol > 0)) throw ContractError("dopri5 tolerances must be positive");

  std::vector<double> t_cur(N), t_end(N), h_try(N), err_prev(N, 1e-4), span(N);
  std::vector<char> done(N), no_growth(N, 0);
  for (std::size_t m = 0; m < N; ++m) {
    const double d = dt.value()[m];
    if (!std::isfinite(d)) throw NumericError("dopri5_integrate: non-finite dt in row " + std::to_string(m));
    t_cur[m] = t_start.value()[m];
    t_end[m] = t_cur[m] + d;
    span[m] = std::abs(d);
    h_try[m] = opt.first_step * d;
    done[m] = d == 0.0;
  }
  if (std::all_of(done.begin(), done.end(), [](char c) { return c != 0; })) return z0;

  const Var t_end_var = t_start + dt;
  Var z = z0;
  Var t = t_start;
  Var k1 = f(t, z);

  for (std::size_t iter = 0;; ++iter) {
    std::vector<char> active(N);
    for (std::size_t m = 0; m < N; ++m) active[m] = !done[m];
    const auto idx = detail::rows_where(active);
    if (idx.empty()) break;
    if (iter >= opt.max_steps) throw NumericError("dopri5_integrate: step budget exhausted");
    const bool all = idx.size() == N;
    const std::size_t A = idx.size();

    const Var za = all ? z : diff::gather_rows(z, idx);
    const Var ta = all ? t : diff::gather_rows(t, idx);
    const Var k1a = all ? k1 : diff::gather_rows(k1, idx);
    const Var tea = all ? t_end_var : diff::gather_rows(t_end_var, idx);

    std::vector<double> h(A);
    std::vector<char> final_step(A);
    for (std::size_t a = 0; a < A; ++a) {
      const std::size_t m = idx[a];
      const double remaining = t_end[m] - t_cur[m];
      final_step[a] = std::abs(h_try[m]) >= std::abs(remaining);
      h[a] = final_step[a] ? remaining : h_try[m];
    }
    const Var hv = diff::where_rows(final_step, tea - ta, detail::column_constant(h));

    using diff::linear_combination;
    using diff::row_axpy;
    const Var k2 = f(ta + c2 * hv, row_axpy(za, hv, k1a, a21));
    const Var k3 = f(ta + c3 * hv, row_axpy(za, hv, linear_combination({k1a, k2}, {a31, a32}), 1.0));
    const Var k4 = f(ta + c4 * hv, row_axpy(za, hv, linear_combination({k1a, k2, k3}, {a41, a42, a43}), 1.0));
    const Var k5 =
        f(ta + c5 * hv, row_axpy(za, hv, linear_combination({k1a, k2, k3, k4}, {a51, a52, a53, a54}), 1.0));
    const Var t_next = ta + hv;
    const Var k6 = f(t_next, row_axpy(za, hv, linear_combination({k1a, k2, k3, k4, k5}, {a61, a62, a63, a64, a65}),
                                      1.0));
    const Var z5 = row_axpy(za, hv, linear_combination({k1a, k3, k4, k5, k6}, {b1, b3, b4, b5, b6}), 1.0);
    const Var k7 = f(t_next, z5);

    std::vector<char> accept(A);
    std::vector<double> err(A);
    {
      const auto zv = za.value().data(), z5v = z5.value().data();
      const auto q1 = k1a.value().data(), q3 = k3.value().data(), q4 = k4.value().data(), q5 = k5.value().data(),
                 q6 = k6.value().data(), q7 = k7.value().data();
      for (std::size_t a = 0; a < A; ++a) {
        double worst = 0.0;
        bool finite = true;
        for (std::size_t k = 0; k < K; ++k) {
          const std::size_t i = a * K + k;
          const double e = h[a] * (e1 * q1[i] + e3 * q3[i] + e4 * q4[i] + e5 * q5[i] + e6 * q6[i] + e7 * q7[i]);
          const double sc = opt.atol + opt.rtol * std::max(std::abs(zv[i]), std::abs(z5v[i]));
          if (!std::isfinite(e) || !std::isfinite(z5v[i]) || !std::isfinite(q7[i])) finite = false;
          worst = std::max(worst, std::abs(e) / sc);
        }
        err[a] = finite ? worst : std::numeric_limits<double>::infinity();
        accept[a] = finite && worst <= 1.0;
      }
    }

    const Var z_new = diff::where_rows(accept, z5, za);
    const Var k1_new = diff::where_rows(accept, k7, k1a);
    const Var t_new = diff::where_rows(accept, t_next, ta);
    if (all) {
      z = z_new;
      k1 = k1_new;
      t = t_new;
    } else {
      z = diff::scatter_rows(z, idx, z_new);
      k1 = diff::scatter_rows(k1, idx, k1_new);
      t = diff::scatter_rows(t, idx, t_new);
    }

    for (std::size_t a = 0; a < A; ++a) {
      const std::size_t m = idx[a];
      double next;
      if (accept[a]) {
        t_cur[m] += h[a];
        if (final_step[a]) {
          done[m] = 1;
          continue;
        }
        const double e = std::max(err[a], 1e-10);
        double fac = opt.safety * std::pow(e, -(0.2 - 0.75 * opt.beta)) * std::pow(err_prev[m], opt.beta);
        fac = std::clamp(fac, opt.fac_min, no_growth[m] ? 1.0 : opt.fac_max);
        next = h[a] * fac;
        err_prev[m] = std::max(err[a], 1e-4);
        no_growth[m] = 0;
      } else {
        const double fac =
            std::isfinite(err[a]) ? std::max(opt.fac_min, opt.safety * std::pow(err[a], -0.2)) : opt.fac_min;
        next = h[a] * fac;
        no_growth[m] = 1;
      }
      if (std::abs(next) < 1e-12 * span[m]) {
        throw NumericError("dopri5_integrate: step size underflow in row " + std::to_string(m) +
                           " (stiff or unstable dynamics)");
      }
      h_try[m] = next;
    }
  }
  detail::check_rows_finite(z, "dopri5_integrate");
  return z;
}

}  // namespace ivpvae::solvers
