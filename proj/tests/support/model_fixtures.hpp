#pragma once

#include <algorithm>
#include <random>
#include <string>

#include "ivpvae/model/task_data.hpp"
#include "support/test_util.hpp"

namespace ivpvae::testing {

inline model::ModelConfig small_config(model::Task task, solvers::Backend backend, std::size_t D = 2,
                                       std::size_t K = 4, std::size_t hidden = 8) {
  model::ModelConfig c;
  c.D = D;
  c.K = K;
  c.embed_hidden = {hidden};
  c.recon_hidden = {hidden};
  c.classifier_hidden = {hidden};
  c.solver.backend = backend;
  c.solver.latent_dim = K;
  c.solver.hidden = {hidden};
  c.solver.flow_layers = 2;
  c.solver.flow_hidden = hidden;
  c.solver.rk4_steps_per_unit = 10;
  c.solver.atol = c.solver.rtol = 1e-6;
  c.task = task;
  c.alpha = model::default_alpha(task);
  return c;
}

/// L steps at times drawn from [t_lo, t_hi], each with at least one of the
/// D variables observed.
inline data::IrregularSeries random_series(std::mt19937_64& rng, std::size_t D, std::size_t L, double t_lo,
                                           double t_hi, const std::string& id) {
  std::uniform_real_distribution<double> time(t_lo, t_hi), value(-2.0, 2.0), coin(0.0, 1.0);
  data::IrregularSeries s;
  s.series_id = id;
  s.num_vars = D;
  for (std::size_t i = 0; i < L; ++i) s.times.push_back(time(rng));
  std::sort(s.times.begin(), s.times.end());
  for (std::size_t i = 0; i < L; ++i) {
    const std::size_t forced = std::uniform_int_distribution<std::size_t>(0, D - 1)(rng);
    for (std::size_t d = 0; d < D; ++d) {
      const bool obs = d == forced || coin(rng) < 0.5;
      s.mask.push_back(obs ? 1 : 0);
      s.values.push_back(obs ? value(rng) : 0.0);
    }
  }
  s.label = coin(rng) < 0.5 ? 1 : 0;
  return s;
}

/// Inputs in [0, 0.6], forecast targets in (0.6, 1].
inline model::TaskData random_task_data(std::mt19937_64& rng, model::Task task, std::size_t n, std::size_t D,
                                        std::size_t max_len = 6) {
  model::TaskData td;
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "r" + std::to_string(i);
    td.ids.push_back(id);
    td.inputs.push_back(random_series(rng, D, len(rng), 0.0, 0.6, id));
    if (task == model::Task::forecast) td.targets.push_back(random_series(rng, D, len(rng), 0.6001, 1.0, id));
  }
  return td;
}

inline const solvers::Backend kAllBackends[] = {solvers::Backend::resnet_flow, solvers::Backend::ode_rk4,
                                               solvers::Backend::ode_dopri5};
inline const model::Task kAllTasks[] = {model::Task::forecast, model::Task::classify, model::Task::unsupervised};

}  // namespace ivpvae::testing
