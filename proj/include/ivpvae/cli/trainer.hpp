#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ivpvae/diffcore/adam.hpp"
#include "ivpvae/evalbench/evaluate.hpp"

namespace ivpvae::train {

struct TrainOptions {
  std::size_t epochs = 100;
  std::size_t patience = 10;
  std::size_t batch_size = 50;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  int lr_step = 20;
  double lr_decay = 0.5;
  std::uint64_t seed = 0;
  double divergence_limit = 1e6;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(lr > 0) || !std::isfinite(lr)) throw ConfigError("lr must be a positive number");
    if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be >= 0");
    if (lr_step < 1) throw ConfigError("lr_step must be >= 1");
    if (!(lr_decay > 0 && lr_decay <= 1)) throw ConfigError("lr_decay must lie in (0, 1]");
  }
};

/// One row of the training log.
struct EpochRecord {
  std::size_t epoch = 0;
  std::string split;
  objectives::LossReport loss;
  double lr = 0.0;
  double wall_seconds = 0.0;
  std::optional<double> metric;
};

inline std::string log_header() { return "epoch,split,total,recon_ll,kl_avg,task_term,lr,wall_seconds,metric\n"; }

inline std::string log_row(const EpochRecord& r) {
  return std::to_string(r.epoch) + "," + r.split + "," + io::format_double(r.loss.total) + "," +
         io::format_double(r.loss.recon_ll) + "," + io::format_double(r.loss.kl_avg) + "," +
         io::format_double(r.loss.task_term) + "," + io::format_double(r.lr) + "," +
         io::format_double(r.wall_seconds) + "," + (r.metric ? io::format_double(*r.metric) : "") + "\n";
}

/// Name and direction of the early-stopping metric.
inline std::string selection_metric_name(model::Task t) { return t == model::Task::classify ? "auroc" : "mse"; }

inline double selection_metric(const eval::MetricReport& m, model::Task t) {
  return t == model::Task::classify ? *m.auroc : *m.mse;
}

inline bool improves(double candidate, double best, model::Task t) {
  return t == model::Task::classify ? candidate > best : candidate < best;
}

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_metric = 0.0;
  eval::Evaluation best_validation;
  std::size_t epochs_run = 0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam with a step schedule, validation after every epoch, early stopping
/// on the task metric. On return `params` holds the best-validation values.
inline TrainResult fit(const model::IvpVae& m, diff::ParamStore& params, const model::TaskData& train,
                       const model::TaskData& val, const TrainOptions& opt, const EpochCallback& on_epoch = {}) {
  opt.validate();
  if (train.size() == 0) throw DataError("training split is empty");
  if (val.size() == 0) throw DataError("validation split is empty");
  const model::Task task = m.config().task;
  diff::AdamState adam(params, opt.lr, opt.weight_decay);
  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  diff::ParamStore best = params;
  TrainResult result;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    adam.lr = diff::lr_schedule(static_cast<int>(epoch), opt.lr, opt.lr_step, opt.lr_decay);
    EpochRecord tr{epoch, "train", {}, adam.lr, 0.0, std::nullopt};
    double weight = 0.0;
    const auto batches = model::make_task_batches(train, opt.batch_size, opt.seed + 1000003ULL * (epoch + 1));
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      params.zero_grad();
      diff::Tape tape;
      diff::Bindings b(params, &tape);
      const std::string where = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(bi);
      model::BatchOutput out;
      try {
        out = model::batch_loss(m, b, batches[bi], model::SampleMode::train, &rng);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at " + where);
      }
      if (!std::isfinite(out.report.total)) throw NumericError("non-finite training loss at " + where);
      if (std::abs(out.report.total) > opt.divergence_limit) {
        throw NumericError("training diverged at " + where + " (loss " + io::format_double(out.report.total) + ")");
      }
      tape.backward(out.total, &params);
      try {
        diff::adam_step(params, adam);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at " + where);
      }
      const double w = static_cast<double>(batches[bi].input.batch_size);
      weight += w;
      tr.loss.total += w * out.report.total;
      tr.loss.recon_ll += w * out.report.recon_ll;
      tr.loss.kl_avg += w * out.report.kl_avg;
      tr.loss.task_term += w * out.report.task_term;
      tr.loss.n_observed += out.report.n_observed;
    }
    tr.loss.total /= weight;
    tr.loss.recon_ll /= weight;
    tr.loss.kl_avg /= weight;
    tr.loss.task_term /= weight;
    tr.wall_seconds = elapsed();
    result.log.push_back(tr);
    if (on_epoch) on_epoch(tr);

    const auto ev = eval::evaluate(m, params, val, opt.batch_size);
    if (!std::isfinite(ev.loss.total)) throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    const double metric = selection_metric(ev.metrics, task);
    EpochRecord vr{epoch, "val", ev.loss, adam.lr, elapsed(), metric};
    result.log.push_back(vr);
    if (on_epoch) on_epoch(vr);
    result.epochs_run = epoch + 1;

    if (epoch == 0 || improves(metric, result.best_metric, task)) {
      result.best_epoch = epoch;
      result.best_metric = metric;
      result.best_validation = ev;
      best.copy_values_from(params);
      since_best = 0;
    } else if (++since_best >= opt.patience && opt.patience > 0) {
      result.stopped_early = true;
      break;
    }
  }
  params.copy_values_from(best);
  return result;
}

}  // namespace ivpvae::train
