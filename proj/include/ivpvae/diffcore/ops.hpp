#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ivpvae/diffcore/tape.hpp"
#include "ivpvae/diffcore/thread_pool.hpp"

// Differentiable operations over rank <= 2 tensors. Every kernel computes a
// given output element with the same sequence of floating-point operations
// regardless of batch size or thread count, so row-wise results are
// independent of what else is in the batch.

namespace ivpvae::diff {

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ContractError(msg);
}

inline void require_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite result in ") + op);
}

inline std::string shapes_msg(const char* op, const Tensor& a, const Tensor& b) {
  return std::string(op) + ": incompatible shapes " + to_string(a.shape()) + " and " + to_string(b.shape());
}

struct BroadcastPlan {
  std::size_t rows = 0, cols = 0;
  std::size_t a_rs = 0, a_cs = 0, b_rs = 0, b_cs = 0;
  Shape shape;
};

inline BroadcastPlan plan_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  const std::size_t ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  auto join = [&](std::size_t x, std::size_t y) {
    if (x == y) return x;
    if (x == 1) return y;
    if (y == 1) return x;
    throw ContractError(shapes_msg(op, a, b));
  };
  BroadcastPlan p;
  p.rows = join(ar, br);
  p.cols = join(ac, bc);
  p.a_rs = ar == 1 ? 0 : ac;
  p.a_cs = ac == 1 ? 0 : 1;
  p.b_rs = br == 1 ? 0 : bc;
  p.b_cs = bc == 1 ? 0 : 1;
  if (a.rank() <= 1 && b.rank() <= 1 && p.rows == 1) {
    p.shape = (a.rank() == 0 && b.rank() == 0) ? Shape{} : Shape{p.cols};
  } else {
    p.shape = Shape{p.rows, p.cols};
  }
  return p;
}

// F(x, y) -> out; DA(x, y, out) and DB(x, y, out) are the partials.
template <class F, class DA, class DB>
Var binary(const Var& a, const Var& b, const char* op, F f, DA da, DB db, bool check = false) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const BroadcastPlan p = plan_broadcast(av, bv, op);
  Tensor out(p.shape);
  {
    const double* x = av.data().data();
    const double* y = bv.data().data();
    double* o = out.data().data();
    for (std::size_t i = 0; i < p.rows; ++i) {
      for (std::size_t j = 0; j < p.cols; ++j) {
        o[i * p.cols + j] = f(x[i * p.a_rs + j * p.a_cs], y[i * p.b_rs + j * p.b_cs]);
      }
    }
  }
  if (check) require_finite(out, op);
  return make_node(std::move(out), {a, b}, [p, da, db](Node& self) {
    const double* x = self.inputs[0]->value.data().data();
    const double* y = self.inputs[1]->value.data().data();
    const double* o = self.value.data().data();
    const double* g = self.grad.data();
    double* ga = input_grad(self, 0);
    double* gb = input_grad(self, 1);
    for (std::size_t i = 0; i < p.rows; ++i) {
      for (std::size_t j = 0; j < p.cols; ++j) {
        const std::size_t k = i * p.cols + j;
        const double xv = x[i * p.a_rs + j * p.a_cs];
        const double yv = y[i * p.b_rs + j * p.b_cs];
        if (ga) ga[i * p.a_rs + j * p.a_cs] += g[k] * da(xv, yv, o[k]);
        if (gb) gb[i * p.b_rs + j * p.b_cs] += g[k] * db(xv, yv, o[k]);
      }
    }
  });
}

// F(x) -> y; D(x, y) is dy/dx.
template <class F, class D>
Var unary(const Var& a, const char* op, F f, D d, bool check = false) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  const std::size_t n = av.size();
  {
    const double* x = av.data().data();
    double* y = out.data().data();
    parallel_for(0, n, 1 << 14, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) y[i] = f(x[i]);
    });
  }
  if (check) require_finite(out, op);
  return make_node(std::move(out), {a}, [d](Node& self) {
    double* ga = input_grad(self, 0);
    if (!ga) return;
    const double* x = self.inputs[0]->value.data().data();
    const double* y = self.value.data().data();
    const double* g = self.grad.data();
    const std::size_t n = self.value.size();
    parallel_for(0, n, 1 << 14, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) ga[i] += g[i] * d(x[i], y[i]);
    });
  });
}

inline double stable_softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// C[i,:] += sum_k A[i,k] * B[k,:] for i in [lo, hi).
inline void gemm_rows(const double* A, const double* B, double* C, std::size_t K, std::size_t M, std::size_t lo,
                      std::size_t hi) {
  for (std::size_t i = lo; i < hi; ++i) {
    double* c = C + i * M;
    const double* a = A + i * K;
    for (std::size_t k = 0; k < K; ++k) {
      const double s = a[k];
      const double* b = B + k * M;
      for (std::size_t j = 0; j < M; ++j) c[j] += s * b[j];
    }
  }
}

inline std::size_t rows_grain(std::size_t work_per_row) {
  return std::max<std::size_t>(1, (1u << 15) / std::max<std::size_t>(1, work_per_row));
}

// dA += dC * B^T, dB += A^T * dC for C = A B (A: N x K, B: K x M).
inline void gemm_backward(const double* A, const double* B, const double* dC, double* dA, double* dB, std::size_t N,
                          std::size_t K, std::size_t M) {
  if (dA) {
    std::vector<double> bt(M * K);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t j = 0; j < M; ++j) bt[j * K + k] = B[k * M + j];
    parallel_for(0, N, rows_grain(K * M), [&](std::size_t lo, std::size_t hi) {
      gemm_rows(dC, bt.data(), dA, M, K, lo, hi);
    });
  }
  if (dB) {
    parallel_for(0, K, std::max<std::size_t>(1, K / 8), [&](std::size_t k0, std::size_t k1) {
      for (std::size_t i = 0; i < N; ++i) {
        const double* g = dC + i * M;
        const double* a = A + i * K;
        for (std::size_t k = k0; k < k1; ++k) {
          const double s = a[k];
          double* b = dB + k * M;
          for (std::size_t j = 0; j < M; ++j) b[j] += s * g[j];
        }
      }
    });
  }
}

}  // namespace detail

// ---- elementwise binary (broadcasting) ----

inline Var add(const Var& a, const Var& b) {
  return detail::binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

inline Var sub(const Var& a, const Var& b) {
  return detail::binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

inline Var mul(const Var& a, const Var& b) {
  return detail::binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

inline Var div(const Var& a, const Var& b) {
  return detail::binary(
      a, b, "div", [](double x, double y) { return x / y; }, [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double o) { return -o / y; }, true);
}

inline Var scale(const Var& a, double c) {
  return detail::unary(
      a, "scale", [c](double x) { return c * x; }, [c](double, double) { return c; });
}

inline Var add_scalar(const Var& a, double c) {
  return detail::unary(
      a, "add_scalar", [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

inline Var neg(const Var& a) { return scale(a, -1.0); }

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& a) { return neg(a); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }
inline Var operator*(const Var& a, double c) { return scale(a, c); }
inline Var operator+(const Var& a, double c) { return add_scalar(a, c); }
inline Var operator+(double c, const Var& a) { return add_scalar(a, c); }
inline Var operator-(const Var& a, double c) { return add_scalar(a, -c); }
inline Var operator-(double c, const Var& a) { return add_scalar(neg(a), c); }

// ---- elementwise unary ----

inline Var tanh(const Var& a) {
  return detail::unary(
      a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

inline Var softplus(const Var& a) {
  return detail::unary(a, "softplus", detail::stable_softplus,
                       [](double x, double) { return detail::stable_sigmoid(x); });
}

inline Var sigmoid(const Var& a) {
  return detail::unary(a, "sigmoid", detail::stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

inline Var exp(const Var& a) {
  return detail::unary(
      a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; }, true);
}

inline Var log(const Var& a) {
  return detail::unary(
      a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; }, true);
}

inline Var square(const Var& a) {
  return detail::unary(
      a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

/// Gradient is passed only where lo < x < hi.
inline Var clamp(const Var& a, double lo, double hi) {
  return detail::unary(
      a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

/// Identity on values; blocks gradient flow.
inline Var detach(const Var& a) { return constant(a.value()); }

// ---- linear algebra ----

/// [N x K] * [K x M] -> [N x M].
inline Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t N = av.rows(), K = av.cols(), M = bv.cols();
  detail::require(bv.rows() == K, detail::shapes_msg("matmul", av, bv));
  Tensor out(Shape{N, M});
  parallel_for(0, N, detail::rows_grain(K * M), [&](std::size_t lo, std::size_t hi) {
    detail::gemm_rows(av.data().data(), bv.data().data(), out.data().data(), K, M, lo, hi);
  });
  return detail::make_node(std::move(out), {a, b}, [N, K, M](detail::Node& self) {
    detail::gemm_backward(self.inputs[0]->value.data().data(), self.inputs[1]->value.data().data(),
                          self.grad.data(), detail::input_grad(self, 0), detail::input_grad(self, 1), N, K, M);
  });
}

/// x * W + b with x [N x K], W [K x M], b [M] or [1 x M].
inline Var affine(const Var& x, const Var& w, const Var& b) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  const std::size_t N = xv.rows(), K = xv.cols(), M = wv.cols();
  detail::require(wv.rows() == K, detail::shapes_msg("affine", xv, wv));
  detail::require(bv.size() == M && bv.rows() == 1, detail::shapes_msg("affine bias", wv, bv));
  Tensor out(Shape{N, M});
  {
    double* o = out.data().data();
    const double* bias = bv.data().data();
    for (std::size_t i = 0; i < N; ++i) std::copy(bias, bias + M, o + i * M);
  }
  parallel_for(0, N, detail::rows_grain(K * M), [&](std::size_t lo, std::size_t hi) {
    detail::gemm_rows(xv.data().data(), wv.data().data(), out.data().data(), K, M, lo, hi);
  });
  return detail::make_node(std::move(out), {x, w, b}, [N, K, M](detail::Node& self) {
    const double* g = self.grad.data();
    detail::gemm_backward(self.inputs[0]->value.data().data(), self.inputs[1]->value.data().data(), g,
                          detail::input_grad(self, 0), detail::input_grad(self, 1), N, K, M);
    if (double* gb = detail::input_grad(self, 2)) {
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < M; ++j) gb[j] += g[i * M + j];
    }
  });
}

/// z + c * (h ⊙ k) with h a per-row column [N x 1] (or scalar) and z, k [N x C].
inline Var row_axpy(const Var& z, const Var& h, const Var& k, double c) {
  const Tensor& zv = z.value();
  const Tensor& hv = h.value();
  const Tensor& kv = k.value();
  const std::size_t N = zv.rows(), C = zv.cols();
  detail::require(kv.shape() == zv.shape(), detail::shapes_msg("row_axpy", zv, kv));
  detail::require(hv.cols() == 1 && (hv.rows() == N || hv.rows() == 1), detail::shapes_msg("row_axpy", zv, hv));
  const std::size_t hs = hv.rows() == 1 ? 0 : 1;
  Tensor out(zv.shape());
  {
    const double* zp = zv.data().data();
    const double* hp = hv.data().data();
    const double* kp = kv.data().data();
    double* o = out.data().data();
    for (std::size_t i = 0; i < N; ++i) {
      const double s = c * hp[i * hs];
      for (std::size_t j = 0; j < C; ++j) o[i * C + j] = zp[i * C + j] + s * kp[i * C + j];
    }
  }
  return detail::make_node(std::move(out), {z, h, k}, [N, C, c, hs](detail::Node& self) {
    const double* g = self.grad.data();
    const double* hp = self.inputs[1]->value.data().data();
    const double* kp = self.inputs[2]->value.data().data();
    if (double* gz = detail::input_grad(self, 0)) {
      for (std::size_t i = 0; i < N * C; ++i) gz[i] += g[i];
    }
    if (double* gh = detail::input_grad(self, 1)) {
      for (std::size_t i = 0; i < N; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < C; ++j) acc += g[i * C + j] * kp[i * C + j];
        gh[i * hs] += c * acc;
      }
    }
    if (double* gk = detail::input_grad(self, 2)) {
      for (std::size_t i = 0; i < N; ++i) {
        const double s = c * hp[i * hs];
        for (std::size_t j = 0; j < C; ++j) gk[i * C + j] += s * g[i * C + j];
      }
    }
  });
}

/// Σ_i coeffs[i] · parts[i] over same-shaped parts, summed left to right.
inline Var linear_combination(const std::vector<Var>& parts, const std::vector<double>& coeffs) {
  detail::require(!parts.empty() && parts.size() == coeffs.size(), "linear_combination: one coefficient per part");
  const Shape& shape = parts[0].shape();
  for (const Var& p : parts) {
    detail::require(p.shape() == shape, detail::shapes_msg("linear_combination", parts[0].value(), p.value()));
  }
  Tensor out(shape);
  const std::size_t n = out.size();
  double* o = out.data().data();
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const double* x = parts[k].value().data().data();
    const double c = coeffs[k];
    if (k == 0) {
      for (std::size_t i = 0; i < n; ++i) o[i] = c * x[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) o[i] += c * x[i];
    }
  }
  return detail::make_node(std::move(out), parts, [coeffs](detail::Node& self) {
    const std::size_t n = self.grad.size();
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      double* gk = detail::input_grad(self, k);
      if (!gk) continue;
      const double c = coeffs[k];
      for (std::size_t i = 0; i < n; ++i) gk[i] += c * self.grad[i];
    }
  });
}

// ---- reductions ----

inline Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return detail::make_node(Tensor::scalar(s), {a}, [](detail::Node& self) {
    double* ga = detail::input_grad(self, 0);
    if (!ga) return;
    const double g = self.grad[0];
    const std::size_t n = self.inputs[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) ga[i] += g;
  });
}

inline Var mean(const Var& a) {
  detail::require(a.size() > 0, "mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

/// Per-row sum: [N x C] -> [N x 1].
inline Var rowwise_sum(const Var& a) {
  const Tensor& av = a.value();
  const std::size_t N = av.rows(), C = av.cols();
  Tensor out(Shape{N, 1});
  for (std::size_t i = 0; i < N; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < C; ++j) s += av[i * C + j];
    out[i] = s;
  }
  return detail::make_node(std::move(out), {a}, [N, C](detail::Node& self) {
    double* ga = detail::input_grad(self, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < C; ++j) ga[i * C + j] += self.grad[i];
  });
}

/// Per-column sum: [N x C] -> [1 x C].
inline Var colwise_sum(const Var& a) {
  const Tensor& av = a.value();
  const std::size_t N = av.rows(), C = av.cols();
  Tensor out(Shape{1, C});
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < C; ++j) out[j] += av[i * C + j];
  return detail::make_node(std::move(out), {a}, [N, C](detail::Node& self) {
    double* ga = detail::input_grad(self, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < C; ++j) ga[i * C + j] += self.grad[j];
  });
}

// ---- structural ----

inline Var reshape(const Var& a, Shape shape) {
  detail::require(element_count(shape) == a.size(), "reshape " + to_string(a.shape()) + " -> " + to_string(shape));
  return detail::make_node(a.value().reshaped(std::move(shape)), {a}, [](detail::Node& self) {
    double* ga = detail::input_grad(self, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
  });
}

inline Var broadcast_to(const Var& a, Shape shape) {
  return add(a, constant(Tensor(std::move(shape), 0.0)));
}

/// Concatenate along columns; all parts share the row count.
inline Var concat_cols(const std::vector<Var>& parts) {
  detail::require(!parts.empty(), "concat_cols of nothing");
  const std::size_t N = parts[0].rows();
  std::size_t C = 0;
  std::vector<std::size_t> offs;
  for (const Var& p : parts) {
    detail::require(p.rows() == N, detail::shapes_msg("concat_cols", parts[0].value(), p.value()));
    offs.push_back(C);
    C += p.cols();
  }
  Tensor out(Shape{N, C});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    const std::size_t pc = pv.cols();
    for (std::size_t i = 0; i < N; ++i)
      std::copy_n(pv.data().data() + i * pc, pc, out.data().data() + i * C + offs[k]);
  }
  return detail::make_node(std::move(out), parts, [N, C, offs](detail::Node& self) {
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      double* gk = detail::input_grad(self, k);
      if (!gk) continue;
      const std::size_t pc = self.inputs[k]->value.cols();
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < pc; ++j) gk[i * pc + j] += self.grad[i * C + offs[k] + j];
    }
  });
}

/// Concatenate along rows; all parts share the column count.
inline Var concat_rows(const std::vector<Var>& parts) {
  detail::require(!parts.empty(), "concat_rows of nothing");
  const std::size_t C = parts[0].cols();
  std::size_t N = 0;
  for (const Var& p : parts) {
    detail::require(p.cols() == C, detail::shapes_msg("concat_rows", parts[0].value(), p.value()));
    N += p.rows();
  }
  Tensor out(Shape{N, C});
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy(p.value().data().begin(), p.value().data().end(), out.data().begin() + off);
    off += p.size();
  }
  return detail::make_node(std::move(out), parts, [](detail::Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      const std::size_t n = self.inputs[k]->value.size();
      if (double* gk = detail::input_grad(self, k)) {
        for (std::size_t i = 0; i < n; ++i) gk[i] += self.grad[off + i];
      }
      off += n;
    }
  });
}

/// Columns [c0, c1).
inline Var slice_cols(const Var& a, std::size_t c0, std::size_t c1) {
  const std::size_t N = a.rows(), C = a.cols();
  detail::require(c0 <= c1 && c1 <= C, "slice_cols out of range for " + to_string(a.shape()));
  const std::size_t W = c1 - c0;
  Tensor out(Shape{N, W});
  for (std::size_t i = 0; i < N; ++i)
    std::copy_n(a.value().data().data() + i * C + c0, W, out.data().data() + i * W);
  return detail::make_node(std::move(out), {a}, [N, C, c0, W](detail::Node& self) {
    double* ga = detail::input_grad(self, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < W; ++j) ga[i * C + c0 + j] += self.grad[i * W + j];
  });
}

/// Rows [r0, r1).
inline Var slice_rows(const Var& a, std::size_t r0, std::size_t r1) {
  const std::size_t N = a.rows(), C = a.cols();
  detail::require(r0 <= r1 && r1 <= N, "slice_rows out of range for " + to_string(a.shape()));
  Tensor out(Shape{r1 - r0, C});
  std::copy(a.value().data().begin() + r0 * C, a.value().data().begin() + r1 * C, out.data().begin());
  return detail::make_node(std::move(out), {a}, [C, r0](detail::Node& self) {
    double* ga = detail::input_grad(self, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[r0 * C + i] += self.grad[i];
  });
}

/// out[r] = a[idx[r]].
inline Var gather_rows(const Var& a, std::vector<std::size_t> idx) {
  const std::size_t N = a.rows(), C = a.cols();
  Tensor out(Shape{idx.size(), C});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    detail::require(idx[r] < N, "gather_rows index out of range");
    std::copy_n(a.value().data().data() + idx[r] * C, C, out.data().data() + r * C);
  }
  return detail::make_node(std::move(out), {a}, [C, idx = std::move(idx)](detail::Node& self) {
    double* ga = detail::input_grad(self, 0);
    if (!ga) return;
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < C; ++j) ga[idx[r] * C + j] += self.grad[r * C + j];
  });
}

/// Copy of `base` with rows idx[r] replaced by values[r]; idx must be distinct.
inline Var scatter_rows(const Var& base, const std::vector<std::size_t>& idx, const Var& values) {
  const std::size_t N = base.rows(), C = base.cols();
  detail::require(values.rows() == idx.size() && values.cols() == C,
                  detail::shapes_msg("scatter_rows", base.value(), values.value()));
  Tensor out = base.value();
  std::vector<char> replaced(N, 0);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    detail::require(idx[r] < N && !replaced[idx[r]], "scatter_rows indices must be distinct and in range");
    replaced[idx[r]] = 1;
    std::copy_n(values.value().data().data() + r * C, C, out.data().data() + idx[r] * C);
  }
  return detail::make_node(std::move(out), {base, values},
                           [C, idx, replaced = std::move(replaced)](detail::Node& self) {
                             const double* g = self.grad.data();
                             if (double* gb = detail::input_grad(self, 0)) {
                               for (std::size_t i = 0; i < replaced.size(); ++i) {
                                 if (replaced[i]) continue;
                                 for (std::size_t j = 0; j < C; ++j) gb[i * C + j] += g[i * C + j];
                               }
                             }
                             if (double* gv = detail::input_grad(self, 1)) {
                               for (std::size_t r = 0; r < idx.size(); ++r)
                                 for (std::size_t j = 0; j < C; ++j) gv[r * C + j] += g[idx[r] * C + j];
                             }
                           });
}

/// out[s] = sum of rows r with segment[r] == s, accumulated in row order.
inline Var segment_sum(const Var& a, std::vector<std::size_t> segment, std::size_t n_segments) {
  const std::size_t N = a.rows(), C = a.cols();
  detail::require(segment.size() == N, "segment_sum: one segment id per row required");
  Tensor out(Shape{n_segments, C});
  for (std::size_t r = 0; r < N; ++r) {
    detail::require(segment[r] < n_segments, "segment_sum: segment id out of range");
    for (std::size_t j = 0; j < C; ++j) out[segment[r] * C + j] += a.value()[r * C + j];
  }
  return detail::make_node(std::move(out), {a}, [C, segment = std::move(segment)](detail::Node& self) {
    double* ga = detail::input_grad(self, 0);
    if (!ga) return;
    for (std::size_t r = 0; r < segment.size(); ++r)
      for (std::size_t j = 0; j < C; ++j) ga[r * C + j] += self.grad[segment[r] * C + j];
  });
}

/// Row r taken from `a` where take_a[r], else from `b`.
inline Var where_rows(const std::vector<char>& take_a, const Var& a, const Var& b) {
  detail::require(a.shape() == b.shape(), detail::shapes_msg("where_rows", a.value(), b.value()));
  const std::size_t N = a.rows(), C = a.cols();
  detail::require(take_a.size() == N, "where_rows: mask length must equal row count");
  Tensor out(a.value().shape());
  for (std::size_t i = 0; i < N; ++i) {
    const Tensor& src = take_a[i] ? a.value() : b.value();
    std::copy_n(src.data().data() + i * C, C, out.data().data() + i * C);
  }
  return detail::make_node(std::move(out), {a, b}, [C, take_a](detail::Node& self) {
    double* ga = detail::input_grad(self, 0);
    double* gb = detail::input_grad(self, 1);
    for (std::size_t i = 0; i < take_a.size(); ++i) {
      double* dst = take_a[i] ? ga : gb;
      if (!dst) continue;
      for (std::size_t j = 0; j < C; ++j) dst[i * C + j] += self.grad[i * C + j];
    }
  });
}

}  // namespace ivpvae::diff
