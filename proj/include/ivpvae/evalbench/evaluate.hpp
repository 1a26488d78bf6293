#pragma once

#include <vector>

#include "ivpvae/evalbench/metrics.hpp"
#include "ivpvae/model/task_data.hpp"

namespace ivpvae::eval {

/// Eval-mode (mixture-mean z₀) metrics of one split: pooled forecast MSE for
/// forecasting, AUROC/AUPRC for classification, reconstruction MSE for
/// unsupervised runs. Also returns the mean objective over batches.
struct Evaluation {
  MetricReport metrics;
  objectives::LossReport loss;
};

inline Evaluation evaluate(const model::IvpVae& m, const diff::ParamStore& params, const model::TaskData& td,
                           std::size_t batch_size = 50) {
  const model::Task task = m.config().task;
  Evaluation ev;
  ev.metrics.task = model::to_string(task);
  ev.metrics.n_series = td.size();
  if (td.size() == 0) throw DataError("evaluate: empty split");
  MseAccumulator mse;
  std::vector<double> scores;
  std::vector<int> labels;
  double weight = 0.0;
  for (const auto& batch : model::make_task_batches(td, batch_size, std::nullopt)) {
    diff::Bindings b(params, nullptr);
    const auto out = model::batch_loss(m, b, batch, model::SampleMode::eval);
    const double w = static_cast<double>(batch.input.batch_size);
    weight += w;
    ev.loss.total += w * out.report.total;
    ev.loss.recon_ll += w * out.report.recon_ll;
    ev.loss.kl_avg += w * out.report.kl_avg;
    ev.loss.task_term += w * out.report.task_term;
    ev.loss.n_observed += out.report.n_observed;
    if (task == model::Task::forecast) {
      const auto tg = model::pack(*batch.target);
      mse.add(out.forecast.value().data(), tg.x.data(), tg.mask.data());
    } else if (task == model::Task::classify) {
      for (double p : out.prob.value().data()) scores.push_back(p);
      for (int y : *batch.input.labels) labels.push_back(y);
    } else {
      const auto in = model::pack(batch.input);
      mse.add(out.recon.value().data(), in.x.data(), in.mask.data());
    }
  }
  ev.loss.total /= weight;
  ev.loss.recon_ll /= weight;
  ev.loss.kl_avg /= weight;
  ev.loss.task_term /= weight;
  if (task == model::Task::classify) {
    ev.metrics.auroc = auroc(scores, labels);
    ev.metrics.auprc = auprc(scores, labels);
  } else {
    ev.metrics.mse = mse.value();
  }
  return ev;
}

/// Decoded values (normalized units) of each input series at the requested
/// times: result[s] is times.size() x D, row-major.
inline std::vector<std::vector<double>> predict(const model::IvpVae& m, const diff::ParamStore& params,
                                                const std::vector<data::IrregularSeries>& inputs,
                                                const std::vector<double>& times, std::size_t batch_size = 50) {
  std::vector<std::vector<double>> out(inputs.size());
  const std::size_t D = m.config().D;
  for (const auto& group : data::batch_indices(inputs.size(), batch_size, std::nullopt)) {
    std::vector<const data::IrregularSeries*> rows;
    for (std::size_t i : group) rows.push_back(&inputs[i]);
    diff::Bindings b(params, nullptr);
    const auto post = m.encode(b, model::pack(data::pad_batch(rows, group)));
    const auto z0 = m.sample_z0(post, model::SampleMode::eval);
    std::vector<double> t;
    std::vector<std::size_t> owner;
    for (std::size_t s = 0; s < group.size(); ++s)
      for (double tt : times) {
        t.push_back(tt);
        owner.push_back(s);
      }
    const auto xhat = m.decode(b, z0, t, owner);
    for (std::size_t s = 0; s < group.size(); ++s) {
      auto& dst = out[group[s]];
      dst.resize(times.size() * D);
      for (std::size_t j = 0; j < times.size(); ++j)
        for (std::size_t d = 0; d < D; ++d) dst[j * D + d] = xhat.value().at(s * times.size() + j, d);
    }
  }
  return out;
}

}  // namespace ivpvae::eval
