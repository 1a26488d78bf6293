#pragma once

#include <algorithm>
#include <cmath>

#include "ivpvae/diffcore/tape.hpp"

namespace ivpvae::diff {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_element = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares reverse-mode gradients of `loss_fn(Bindings&) -> scalar Var`
/// against the fourth-order central difference
///   (8(f(w+h) − f(w−h)) − (f(w+2h) − f(w−2h))) / 12h
/// over every parameter element. Relative error is
/// |analytic − fd| / max(1e-8, |fd|).
template <class LossFn>
GradCheckResult check_gradients_detailed(LossFn&& loss_fn, ParamStore& params, double h = 1e-3) {
  params.zero_grad();
  {
    Tape tape;
    Bindings b(params, &tape);
    Var loss = loss_fn(b);
    tape.backward(loss, &params);
  }
  auto eval = [&] {
    Bindings b(params, nullptr);
    return loss_fn(b).item();
  };
  GradCheckResult r;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto w = params.value(p).data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double orig = w[k];
      auto at = [&](double offset) {
        w[k] = orig + offset;
        return eval();
      };
      const double f1 = at(h), f_1 = at(-h), f2 = at(2 * h), f_2 = at(-2 * h);
      w[k] = orig;
      const double fd = (8.0 * (f1 - f_1) - (f2 - f_2)) / (12.0 * h);
      const double an = params.grad(p)[k];
      const double err = std::abs(an - fd) / std::max(1e-8, std::abs(fd));
      if (err > r.max_rel_error) r = {err, p, k, an, fd};
    }
  }
  return r;
}

template <class LossFn>
double check_gradients(LossFn&& loss_fn, ParamStore& params, double h = 1e-3) {
  return check_gradients_detailed(std::forward<LossFn>(loss_fn), params, h).max_rel_error;
}

}  // namespace ivpvae::diff
