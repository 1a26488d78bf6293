#pragma once

#include <algorithm>
#include <chrono>
#include <random>
#include <string>
#include <vector>

#include "ivpvae/diffcore/thread_pool.hpp"
#include "ivpvae/model/ivp_vae.hpp"
#include "ivpvae/util/io.hpp"

namespace ivpvae::eval {

enum class BenchMode { parallel, sequential };

struct BenchReport {
  std::size_t L = 0;
  std::size_t B = 0;
  std::string backend;
  std::size_t threads = 1;
  double t_parallel_s = 0.0;
  double t_sequential_s = 0.0;
  double speedup = 0.0;
  std::size_t repeats = 0;
  /// Largest |Δ| between the two modes over all μ and σ entries.
  double max_abs_diff = 0.0;

  static std::string csv_header() {
    return "L,B,backend,threads,t_parallel_s,t_sequential_s,speedup,repeats,max_abs_diff";
  }
  std::string csv_row() const {
    return std::to_string(L) + "," + std::to_string(B) + "," + backend + "," + std::to_string(threads) + "," +
           io::format_double(t_parallel_s) + "," + io::format_double(t_sequential_s) + "," +
           io::format_double(speedup) + "," + std::to_string(repeats) + "," + io::format_double(max_abs_diff);
  }
};

/// B series of L observations each at uniform times in (0, 1], all
/// variables observed.
inline data::PaddedBatch bench_batch(std::size_t L, std::size_t B, std::size_t D, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(0.0, 1.0), value(-2.0, 2.0);
  std::vector<data::IrregularSeries> series(B);
  for (std::size_t b = 0; b < B; ++b) {
    auto& s = series[b];
    s.series_id = "b" + std::to_string(b);
    s.num_vars = D;
    for (std::size_t l = 0; l < L; ++l) s.times.push_back(1.0 - time(rng));
    std::sort(s.times.begin(), s.times.end());
    for (std::size_t i = 0; i < L * D; ++i) {
      s.values.push_back(value(rng));
      s.mask.push_back(1);
    }
  }
  std::vector<const data::IrregularSeries*> rows;
  for (const auto& s : series) rows.push_back(&s);
  return data::pad_batch(rows);
}

namespace detail {

struct EncodedComponents {
  std::vector<double> mu;
  std::vector<double> sigma;
};

/// All B·L initial-value problems, split into one contiguous chunk of rows
/// per worker; each chunk is a single batched no-grad encode.
inline EncodedComponents encode_parallel(const model::IvpVae& m, const diff::ParamStore& params,
                                         const model::Packed& all, std::size_t threads) {
  const std::size_t M = all.rows(), K = m.config().K, D = m.config().D;
  EncodedComponents out{std::vector<double>(M * K), std::vector<double>(M * K)};
  const std::size_t chunks = std::max<std::size_t>(1, std::min(threads, M));
  diff::parallel_for(0, chunks, 1, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c) {
      const std::size_t r0 = M * c / chunks, r1 = M * (c + 1) / chunks;
      model::Packed part;
      part.n_series = r1 - r0;
      part.x = diff::Tensor(diff::Shape{r1 - r0, D});
      part.mask = diff::Tensor(diff::Shape{r1 - r0, D});
      for (std::size_t r = r0; r < r1; ++r) {
        part.t.push_back(all.t[r]);
        part.owner.push_back(r - r0);
        part.offset.push_back(r - r0);
        for (std::size_t d = 0; d < D; ++d) {
          part.x.at(r - r0, d) = all.x.at(r, d);
          part.mask.at(r - r0, d) = all.mask.at(r, d);
        }
      }
      part.offset.push_back(r1 - r0);
      diff::Bindings b(params, nullptr);
      const auto post = m.encode(b, part);
      std::copy(post.mu.value().data().begin(), post.mu.value().data().end(), out.mu.begin() + r0 * K);
      std::copy(post.sigma.value().data().begin(), post.sigma.value().data().end(), out.sigma.begin() + r0 * K);
    }
  });
  return out;
}

/// One observation at a time on the calling thread.
inline EncodedComponents encode_sequential(const model::IvpVae& m, const diff::ParamStore& params,
                                           const model::Packed& all) {
  const std::size_t M = all.rows(), K = m.config().K, D = m.config().D;
  EncodedComponents out{std::vector<double>(M * K), std::vector<double>(M * K)};
  model::Packed one;
  one.n_series = 1;
  one.owner = {0};
  one.offset = {0, 1};
  one.t = {0.0};
  one.x = diff::Tensor(diff::Shape{1, D});
  one.mask = diff::Tensor(diff::Shape{1, D});
  for (std::size_t r = 0; r < M; ++r) {
    one.t[0] = all.t[r];
    for (std::size_t d = 0; d < D; ++d) {
      one.x.at(0, d) = all.x.at(r, d);
      one.mask.at(0, d) = all.mask.at(r, d);
    }
    diff::Bindings b(params, nullptr);
    const auto post = m.encode(b, one);
    std::copy(post.mu.value().data().begin(), post.mu.value().data().end(), out.mu.begin() + r * K);
    std::copy(post.sigma.value().data().begin(), post.sigma.value().data().end(), out.sigma.begin() + r * K);
  }
  return out;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Times the encoder's backward solves over a synthetic B x L batch in both
/// modes: median wall time of `repeats` runs after one warm-up, with the
/// worker pool resized to `threads` for the parallel mode. Data generation
/// is excluded from the timings.
inline BenchReport bench_encoder(const model::IvpVae& m, const diff::ParamStore& params, std::size_t L,
                                 std::size_t B, std::size_t repeats, std::size_t threads, std::uint64_t seed = 0) {
  if (repeats < 3) throw ConfigError("bench repeats must be >= 3");
  if (L < 1 || B < 1) throw ConfigError("bench L and B must be >= 1");
  const model::Packed all = model::pack(bench_batch(L, B, m.config().D, seed));
  const std::size_t saved = diff::num_threads();
  using clock = std::chrono::steady_clock;
  auto time_it = [&](auto&& fn) {
    std::vector<double> t;
    (void)fn();
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto start = clock::now();
      (void)fn();
      t.push_back(std::chrono::duration<double>(clock::now() - start).count());
    }
    return detail::median(t);
  };
  BenchReport rep;
  rep.L = L;
  rep.B = B;
  rep.backend = solvers::to_string(m.config().solver.backend);
  rep.threads = threads;
  rep.repeats = repeats;

  diff::set_num_threads(threads);
  rep.t_parallel_s = time_it([&] { return detail::encode_parallel(m, params, all, threads); });
  const auto par = detail::encode_parallel(m, params, all, threads);
  diff::set_num_threads(1);
  rep.t_sequential_s = time_it([&] { return detail::encode_sequential(m, params, all); });
  const auto seq = detail::encode_sequential(m, params, all);
  diff::set_num_threads(saved);

  for (std::size_t i = 0; i < par.mu.size(); ++i) {
    rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(par.mu[i] - seq.mu[i]));
    rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(par.sigma[i] - seq.sigma[i]));
  }
  rep.speedup = rep.t_sequential_s / rep.t_parallel_s;
  return rep;
}

}  // namespace ivpvae::eval
