#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "ivpvae/diffcore/adam.hpp"
#include "ivpvae/diffcore/thread_pool.hpp"
#include "support/model_fixtures.hpp"

namespace ivpvae::testing {

struct PropertyResult {
  std::size_t cases = 0;
  std::size_t failures = 0;
  double worst = 0.0;
  std::string first_failure;

  void fail(const std::string& what) {
    if (failures++ == 0) first_failure = what;
  }
  bool ok() const { return failures == 0 && cases > 0; }
};

struct RandomModel {
  std::unique_ptr<diff::ParamStore> store;
  model::IvpVae model;
  model::TaskData data;
};

/// Case i cycles through every (task, backend) pair with its own seed.
inline RandomModel random_model(std::size_t i, std::uint64_t base_seed, std::size_t n_series) {
  const model::Task task = kAllTasks[i % 3];
  const solvers::Backend backend = kAllBackends[(i / 3) % 3];
  const std::uint64_t seed = base_seed + 7919 * i;
  RandomModel rm;
  rm.store = std::make_unique<diff::ParamStore>(seed);
  rm.model = model::IvpVae(*rm.store, small_config(task, backend));
  randomize(*rm.store, seed + 1, 0.6);
  std::mt19937_64 rng(seed + 2);
  rm.data = random_task_data(rng, task, n_series, 2);
  return rm;
}

inline std::string case_name(std::size_t i, const model::IvpVae& m) {
  return "case " + std::to_string(i) + " (" + model::to_string(m.config().task) + ", " +
         solvers::to_string(m.config().solver.backend) + ")";
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

/// σ >= 1e-4, π >= 0, |Σπ − 1| <= 1e-9 per series, every KL >= 0, and
/// kl_avg >= 0, on random models and inputs in train and eval mode.
inline PropertyResult check_posterior_bounds(std::size_t cases, std::uint64_t seed) {
  PropertyResult r;
  for (std::size_t i = 0; i < cases; ++i) {
    RandomModel rm = random_model(i, seed, 4);
    diff::Bindings b(*rm.store, nullptr);
    std::mt19937_64 rng(seed + i);
    const auto batch = model::make_task_batch(rm.data, {0, 1, 2, 3});
    const auto out = model::batch_loss(rm.model, b, batch, model::SampleMode::train, &rng);
    const auto& post = out.post;
    bool ok = out.report.kl_avg >= 0 && std::isfinite(out.report.total);
    for (double s : post.sigma.value().data()) ok = ok && s >= model::kSigmaFloor;
    for (double k : post.kl.value().data()) ok = ok && k >= 0;
    for (std::size_t s = 0; s < post.n_series; ++s) {
      double total = 0.0;
      for (std::size_t j = post.offset[s]; j < post.offset[s + 1]; ++j) {
        ok = ok && post.pi[j] >= 0;
        total += post.pi[j];
      }
      r.worst = std::max(r.worst, std::abs(total - 1.0));
      ok = ok && std::abs(total - 1.0) <= 1e-9;
    }
    ++r.cases;
    if (!ok) r.fail(case_name(i, rm.model));
  }
  return r;
}

/// Shuffling the (x_i, t_i) pairs of a series permutes its components with
/// their π, and leaves the eval-mode z₀ unchanged (<= 1e-10).
inline PropertyResult check_permutation_invariance(std::size_t cases, std::uint64_t seed) {
  PropertyResult r;
  for (std::size_t i = 0; i < cases; ++i) {
    RandomModel rm = random_model(i, seed, 1);
    std::mt19937_64 rng(seed + 31 * i);
    const data::IrregularSeries& s = rm.data.inputs[0];
    const std::size_t L = s.length(), D = s.num_vars, K = rm.model.config().K;
    std::vector<std::size_t> perm(L);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    data::IrregularSeries shuffled = s;
    for (std::size_t j = 0; j < L; ++j) {
      shuffled.times[j] = s.times[perm[j]];
      for (std::size_t d = 0; d < D; ++d) {
        shuffled.values[j * D + d] = s.values[perm[j] * D + d];
        shuffled.mask[j * D + d] = s.mask[perm[j] * D + d];
      }
    }
    diff::Bindings b(*rm.store, nullptr);
    const auto post_a = rm.model.encode(b, model::pack(data::pad_batch({&s})));
    const auto post_b = rm.model.encode(b, model::pack(data::pad_batch({&shuffled})));
    double worst = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      for (std::size_t k = 0; k < K; ++k) {
        worst = std::max(worst, std::abs(post_b.mu.value().at(j, k) - post_a.mu.value().at(perm[j], k)));
        worst = std::max(worst, std::abs(post_b.sigma.value().at(j, k) - post_a.sigma.value().at(perm[j], k)));
      }
      worst = std::max(worst, std::abs(post_b.pi[j] - post_a.pi[perm[j]]));
    }
    const auto z_a = rm.model.sample_z0(post_a, model::SampleMode::eval);
    const auto z_b = rm.model.sample_z0(post_b, model::SampleMode::eval);
    worst = std::max(worst, max_abs_diff(z_a.value().data(), z_b.value().data()));
    r.worst = std::max(r.worst, worst);
    ++r.cases;
    if (!(worst <= 1e-10)) r.fail(case_name(i, rm.model) + ": diff " + std::to_string(worst));
  }
  return r;
}

/// Eval-mode outputs of a series (z₀, reconstruction, forecast, class
/// probability) are the same alone as inside a batch (<= 1e-10).
inline PropertyResult check_batching_transparency(std::size_t cases, std::uint64_t seed) {
  PropertyResult r;
  for (std::size_t i = 0; i < cases; ++i) {
    RandomModel rm = random_model(i, seed, 5);
    diff::Bindings b(*rm.store, nullptr);
    std::vector<std::size_t> all(rm.data.size());
    std::iota(all.begin(), all.end(), 0);
    const auto full = model::batch_loss(rm.model, b, model::make_task_batch(rm.data, all), model::SampleMode::eval);
    double worst = 0.0;
    std::size_t in_row = 0, tg_row = 0;
    for (std::size_t s = 0; s < all.size(); ++s) {
      const auto one = model::batch_loss(rm.model, b, model::make_task_batch(rm.data, {s}), model::SampleMode::eval);
      const std::size_t K = rm.model.config().K, D = rm.model.config().D;
      for (std::size_t k = 0; k < K; ++k)
        worst = std::max(worst, std::abs(one.z0.value()[k] - full.z0.value().at(s, k)));
      for (std::size_t j = 0; j < one.recon.rows(); ++j, ++in_row)
        for (std::size_t d = 0; d < D; ++d)
          worst = std::max(worst, std::abs(one.recon.value().at(j, d) - full.recon.value().at(in_row, d)));
      if (one.forecast.defined()) {
        for (std::size_t j = 0; j < one.forecast.rows(); ++j, ++tg_row)
          for (std::size_t d = 0; d < D; ++d)
            worst = std::max(worst, std::abs(one.forecast.value().at(j, d) - full.forecast.value().at(tg_row, d)));
      }
      if (one.prob.defined()) worst = std::max(worst, std::abs(one.prob.item() - full.prob.value()[s]));
    }
    r.worst = std::max(r.worst, worst);
    ++r.cases;
    if (!(worst <= 1e-10)) r.fail(case_name(i, rm.model) + ": diff " + std::to_string(worst));
  }
  return r;
}

/// A few seeded training steps on one thread produce bit-identical
/// parameters when repeated.
inline PropertyResult check_seed_reproducibility(std::size_t cases, std::uint64_t seed, std::size_t steps = 2) {
  PropertyResult r;
  const std::size_t saved_threads = diff::num_threads();
  diff::set_num_threads(1);
  auto run = [&](std::size_t i) {
    RandomModel rm = random_model(i, seed, 4);
    diff::AdamState adam(*rm.store, 1e-2, 1e-4);
    std::mt19937_64 rng(seed ^ (i + 1));
    const auto batches = model::make_task_batches(rm.data, 2, seed + i);
    for (std::size_t step = 0; step < steps; ++step) {
      rm.store->zero_grad();
      diff::Tape tape;
      diff::Bindings b(*rm.store, &tape);
      const auto out = model::batch_loss(rm.model, b, batches[step % batches.size()], model::SampleMode::train, &rng);
      tape.backward(out.total, rm.store.get());
      diff::adam_step(*rm.store, adam);
    }
    return rm;
  };
  for (std::size_t i = 0; i < cases; ++i) {
    const RandomModel a = run(i);
    const RandomModel b = run(i);
    ++r.cases;
    if (!(*a.store == *b.store)) r.fail(case_name(i, a.model));
  }
  diff::set_num_threads(saved_threads);
  return r;
}

}  // namespace ivpvae::testing
