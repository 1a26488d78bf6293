#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ivpvae/diffcore/mlp.hpp"
#include "ivpvae/model/config.hpp"
#include "ivpvae/objectives/losses.hpp"
#include "ivpvae/seriesdata/batch.hpp"
#include "ivpvae/solvers/ivp_solver.hpp"
#include "ivpvae/util/log.hpp"

namespace ivpvae::model {

using diff::Bindings;
using diff::ParamStore;
using diff::Tensor;
using diff::Var;

inline constexpr double kSigmaFloor = 1e-4;

/// The real timesteps of a padded batch stacked into rows, series by series.
struct Packed {
  Tensor x;     ///< [M x D], zero where unobserved
  Tensor mask;  ///< [M x D], 1 where observed
  std::vector<double> t;
  std::vector<std::size_t> owner;   ///< batch row of each packed row
  std::vector<std::size_t> offset;  ///< rows of series b are [offset[b], offset[b+1])
  std::size_t n_series = 0;

  std::size_t rows() const { return t.size(); }
  std::size_t length(std::size_t b) const { return offset[b + 1] - offset[b]; }
};

inline Packed pack(const data::PaddedBatch& pb) {
  Packed p;
  p.n_series = pb.batch_size;
  const std::size_t M = pb.total_steps(), D = pb.num_vars;
  p.x = Tensor(diff::Shape{M, D});
  p.mask = Tensor(diff::Shape{M, D});
  p.offset.push_back(0);
  std::size_t row = 0;
  for (std::size_t b = 0; b < pb.batch_size; ++b) {
    for (std::size_t l = 0; l < pb.max_len; ++l) {
      if (!pb.real(b, l)) continue;
      p.t.push_back(pb.time(b, l));
      p.owner.push_back(b);
      for (std::size_t d = 0; d < D; ++d) {
        if (!pb.observed(b, l, d)) continue;
        p.x.at(row, d) = pb.value(b, l, d);
        p.mask.at(row, d) = 1.0;
      }
      ++row;
    }
    p.offset.push_back(row);
  }
  return p;
}

/// π over one series' components: uniform for classification and
/// unsupervised runs, KL-proportional for forecasting. Always a constant.
inline std::vector<double> mixing_coefficients(Task task, const std::vector<double>& kl) {
  const std::size_t L = kl.size();
  if (L == 0) throw ContractError("mixing_coefficients: no components");
  std::vector<double> pi(L, 1.0 / static_cast<double>(L));
  if (task != Task::forecast) return pi;
  double total = 0.0;
  for (double k : kl) {
    if (std::isnan(k) || std::isinf(k)) throw NumericError("mixing_coefficients: non-finite KL value");
    if (k < 0) throw ContractError("mixing_coefficients: KL values must be >= 0");
    total += k;
  }
  if (total == 0.0) {
    warn("all component KL values are zero; using uniform mixing coefficients");
    return pi;
  }
  for (std::size_t i = 0; i < L; ++i) pi[i] = kl[i] / total;
  return pi;
}

/// Mixture posterior over z₀: one diagonal Gaussian per packed row.
struct Posterior {
  Var mu;     ///< [M x K]
  Var sigma;  ///< [M x K], >= kSigmaFloor
  Var kl;     ///< [M x 1], KL of each component to N(0, I)
  std::vector<double> pi;
  std::vector<std::size_t> owner;
  std::vector<std::size_t> offset;
  std::size_t n_series = 0;
};

enum class SampleMode { train, eval };

class IvpVae {
 public:
  IvpVae() = default;

  /// Parameters are registered as embed, solver, head, recon, classifier,
  /// so the shared part is initialized identically whatever the task.
  IvpVae(ParamStore& store, ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const std::size_t D = cfg_.D, K = cfg_.K;
    embed_ = diff::Mlp::create(store, "embed", widths(2 * D, cfg_.embed_hidden, K));
    solver_ = solvers::IvpSolver(store, cfg_.solver, "solver");
    head_w_ = store.add_uniform("head.weight", {K, 2 * K}, K);
    head_b_ = store.add_zeros("head.bias", {2 * K});
    recon_ = diff::Mlp::create(store, "recon", widths(K, cfg_.recon_hidden, D));
    if (cfg_.task == Task::classify) classifier_ = diff::Mlp::create(store, "classifier", widths(K, cfg_.classifier_hidden, 1));
  }

  const ModelConfig& config() const { return cfg_; }
  const solvers::IvpSolver& solver() const { return solver_; }
  bool has_classifier() const { return !classifier_.weights.empty(); }

  /// Per-timestep embedding of concat(x, m) in R^{2D}.
  Var embed(Bindings& b, const Tensor& x, const Tensor& mask) const {
    Tensor filled = x;
    for (std::size_t i = 0; i < filled.size(); ++i)
      if (mask[i] == 0.0) filled[i] = 0.0;
    return embed_(b, diff::concat_cols({diff::constant(filled), diff::constant(mask)}));
  }

  /// Evolves every observation back to t₀ = 0 in one batched solve and maps
  /// each result to (μ, σ).
  Posterior encode(Bindings& b, const Packed& in) const {
    for (std::size_t s = 0; s < in.n_series; ++s) {
      if (in.length(s) == 0) throw DataError("encode: series " + std::to_string(s) + " has no input timesteps");
    }
    const Var z_obs = embed(b, in.x, in.mask);
    const Var t = diff::constant(Tensor::column(in.t));
    const Var z0 = solver_.solve(b, z_obs, -t, t);
    const Var h = diff::affine(z0, b(head_w_), b(head_b_));
    Posterior post;
    post.mu = diff::slice_cols(h, 0, cfg_.K);
    post.sigma = diff::softplus(diff::slice_cols(h, cfg_.K, 2 * cfg_.K)) + kSigmaFloor;
    post.kl = objectives::kl_diag_gauss(post.mu, post.sigma);
    post.owner = in.owner;
    post.offset = in.offset;
    post.n_series = in.n_series;
    post.pi.resize(in.rows());
    for (std::size_t s = 0; s < in.n_series; ++s) {
      const std::vector<double> kl(post.kl.value().data().begin() + static_cast<std::ptrdiff_t>(in.offset[s]),
                                   post.kl.value().data().begin() + static_cast<std::ptrdiff_t>(in.offset[s + 1]));
      const auto pi = mixing_coefficients(cfg_.task, kl);
      std::copy(pi.begin(), pi.end(), post.pi.begin() + static_cast<std::ptrdiff_t>(in.offset[s]));
    }
    return post;
  }

  /// [B x K]. Train mode picks one component per series from π and
  /// reparameterizes within it; eval mode returns the mixture mean Σ π μ.
  Var sample_z0(const Posterior& post, SampleMode mode, std::mt19937_64* rng = nullptr) const {
    if (mode == SampleMode::eval) {
      return diff::segment_sum(post.mu * diff::constant(Tensor::column(post.pi)), post.owner, post.n_series);
    }
    if (!rng) throw ContractError("sample_z0: train mode needs a random generator");
    std::vector<std::size_t> chosen(post.n_series);
    Tensor eta(diff::Shape{post.n_series, cfg_.K});
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t s = 0; s < post.n_series; ++s) {
      const auto first = post.pi.begin() + static_cast<std::ptrdiff_t>(post.offset[s]);
      const auto last = post.pi.begin() + static_cast<std::ptrdiff_t>(post.offset[s + 1]);
      std::discrete_distribution<std::size_t> pick(first, last);
      chosen[s] = post.offset[s] + pick(*rng);
      for (std::size_t k = 0; k < cfg_.K; ++k) eta.at(s, k) = normal(*rng);
    }
    return diff::gather_rows(post.mu, chosen) + diff::gather_rows(post.sigma, chosen) * diff::constant(eta);
  }

  /// Reconstruction at `times[j]` of series `owner[j]`, in the given order,
  /// from one batched forward solve starting at t₀ = 0. [J x D].
  Var decode(Bindings& b, const Var& z0, const std::vector<double>& times, const std::vector<std::size_t>& owner) const {
    if (times.size() != owner.size()) throw ContractError("decode: times and owner lengths differ");
    const Var z_start = diff::gather_rows(z0, owner);
    const Var z = solver_.solve(b, z_start, diff::constant(Tensor::column(times)));
    return recon_(b, z);
  }

  /// p(y = 1 | z₀), [B x 1].
  Var classify(Bindings& b, const Var& z0) const {
    if (!has_classifier()) throw ContractError("classify: model was built without a classifier head");
    return diff::sigmoid(classifier_(b, z0));
  }

 private:
  static std::vector<std::size_t> widths(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
    std::vector<std::size_t> w{in};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
  }

  ModelConfig cfg_;
  diff::Mlp embed_;
  solvers::IvpSolver solver_;
  std::size_t head_w_ = 0;
  std::size_t head_b_ = 0;
  diff::Mlp recon_;
  diff::Mlp classifier_;
};

/// Input window plus, for forecasting, the supervised target window of the
/// same series in the same order.
struct TaskBatch {
  data::PaddedBatch input;
  std::optional<data::PaddedBatch> target;
};

struct BatchOutput {
  Var total;  ///< mean over series of −recon_ll + kl_avg + α·task_term
  objectives::LossReport report;
  Posterior post;
  Var z0;
  Var recon;     ///< [M_in x D]
  Var forecast;  ///< [M_target x D] (forecast task only)
  Var prob;      ///< [B x 1] (classify task only)
};

/// Full objective of one batch. Per series: the reconstruction likelihood of
/// its observed inputs, the average KL of its components and the task term;
/// the batch value is the mean over series.
inline BatchOutput batch_loss(const IvpVae& model, Bindings& b, const TaskBatch& batch, SampleMode mode,
                              std::mt19937_64* rng = nullptr) {
  const ModelConfig& cfg = model.config();
  const Packed in = pack(batch.input);
  const std::size_t B = in.n_series;
  BatchOutput out;
  out.post = model.encode(b, in);
  out.z0 = model.sample_z0(out.post, mode, rng);

  std::vector<double> times = in.t;
  std::vector<std::size_t> owner = in.owner;
  std::optional<Packed> tg;
  if (cfg.task == Task::forecast) {
    if (!batch.target) throw ContractError("batch_loss: forecast task needs a target window");
    tg = pack(*batch.target);
    if (tg->n_series != B) throw ContractError("batch_loss: input and target batches differ in size");
    times.insert(times.end(), tg->t.begin(), tg->t.end());
    owner.insert(owner.end(), tg->owner.begin(), tg->owner.end());
  }
  const Var decoded = model.decode(b, out.z0, times, owner);
  out.recon = tg ? diff::slice_rows(decoded, 0, in.rows()) : decoded;

  const Var ll_rows = diff::rowwise_sum(objectives::recon_loglik_entries(out.recon, in.x, in.mask));
  const Var recon_s = diff::segment_sum(ll_rows, in.owner, B);
  std::vector<double> inv_len(B);
  for (std::size_t s = 0; s < B; ++s) inv_len[s] = 1.0 / static_cast<double>(in.length(s));
  const Var kl_s = diff::segment_sum(out.post.kl, in.owner, B) * diff::constant(Tensor::column(inv_len));

  std::size_t n_obs = 0;
  for (double m : in.mask.data()) n_obs += m != 0.0;
  Var task_s = diff::constant(Tensor(diff::Shape{B, 1}));
  if (tg) {
    out.forecast = diff::slice_rows(decoded, in.rows(), in.rows() + tg->rows());
    const Var sq = diff::rowwise_sum(objectives::masked_sq_error(out.forecast, tg->x, tg->mask));
    std::vector<double> inv_obs(B, 0.0), obs(B, 0.0);
    for (std::size_t r = 0; r < tg->rows(); ++r)
      for (std::size_t d = 0; d < cfg.D; ++d) obs[tg->owner[r]] += tg->mask.at(r, d);
    for (std::size_t s = 0; s < B; ++s) {
      if (obs[s] == 0.0) {
        throw DataError("forecast loss: series #" + std::to_string(batch.input.members[s]) +
                        " has no observed forecast entries");
      }
      inv_obs[s] = 1.0 / obs[s];
      n_obs += static_cast<std::size_t>(obs[s]);
    }
    task_s = diff::segment_sum(sq, tg->owner, B) * diff::constant(Tensor::column(inv_obs));
  } else if (cfg.task == Task::classify) {
    if (!batch.input.labels) throw DataError("classification needs a label for every series");
    std::vector<double> y(batch.input.labels->begin(), batch.input.labels->end());
    out.prob = model.classify(b, model.sample_z0(out.post, SampleMode::eval));
    task_s = objectives::cross_entropy(out.prob, Tensor::column(y));
  }

  const Var per_series = kl_s - recon_s + cfg.alpha * task_s;
  out.total = diff::mean(per_series);
  const double inv_b = 1.0 / static_cast<double>(B);
  double recon_mean = 0.0, kl_mean = 0.0, task_mean = 0.0;
  for (std::size_t s = 0; s < B; ++s) {
    recon_mean += recon_s.value()[s];
    kl_mean += kl_s.value()[s];
    task_mean += task_s.value()[s];
  }
  out.report = objectives::combine(recon_mean * inv_b, kl_mean * inv_b, task_mean * inv_b, cfg.alpha, n_obs);
  out.report.total = out.total.item();
  return out;
}

}  // namespace ivpvae::model
