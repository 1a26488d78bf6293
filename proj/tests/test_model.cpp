#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ivpvae/diffcore/gradcheck.hpp"
#include "ivpvae/model/checkpoint.hpp"
#include "support/properties.hpp"

using namespace ivpvae;
using namespace ivpvae::model;
using diff::Bindings;
using diff::ParamStore;
using diff::Tensor;
using solvers::Backend;
namespace fx = ivpvae::testing;

namespace {

/// Plain re-evaluation of a tanh MLP stored under `prefix`.
std::vector<double> eval_mlp(const ParamStore& st, const std::string& prefix, std::size_t layers,
                             std::vector<double> x) {
  for (std::size_t l = 0; l < layers; ++l) {
    const Tensor& w = st.value(st.index(prefix + ".l" + std::to_string(l) + ".weight"));
    const Tensor& b = st.value(st.index(prefix + ".l" + std::to_string(l) + ".bias"));
    std::vector<double> y(w.cols());
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double a = b[j];
      for (std::size_t i = 0; i < w.rows(); ++i) a += x[i] * w.at(i, j);
      y[j] = l + 1 < layers ? std::tanh(a) : a;
    }
    x = std::move(y);
  }
  return x;
}

data::IrregularSeries series_of(std::vector<double> times, std::vector<double> values, std::size_t D) {
  data::IrregularSeries s;
  s.series_id = "s";
  s.num_vars = D;
  s.times = std::move(times);
  s.values = std::move(values);
  s.mask.assign(s.values.size(), 1);
  s.label = 1;
  return s;
}

Posterior manual_posterior(std::vector<double> mu, std::vector<double> sigma, std::vector<double> pi, std::size_t K) {
  Posterior p;
  const std::size_t L = pi.size();
  p.mu = diff::constant(Tensor::matrix(L, K, std::move(mu)));
  p.sigma = diff::constant(Tensor::matrix(L, K, std::move(sigma)));
  p.pi = std::move(pi);
  p.owner.assign(L, 0);
  p.offset = {0, L};
  p.n_series = 1;
  return p;
}

}  // namespace

TEST(Embed, PermutingStepsPermutesOutputs) {
  ParamStore store(1);
  IvpVae m(store, fx::small_config(Task::forecast, Backend::resnet_flow));
  fx::randomize(store, 2);
  const Tensor x = Tensor::matrix(3, 2, {0.5, -1.0, 2.0, 0.0, 1.5, 0.3});
  const Tensor mask = Tensor::matrix(3, 2, {1, 1, 1, 0, 0, 1});
  const Tensor xp = Tensor::matrix(3, 2, {1.5, 0.3, 0.5, -1.0, 2.0, 0.0});
  const Tensor mp = Tensor::matrix(3, 2, {0, 1, 1, 1, 1, 0});
  Bindings b(store, nullptr);
  const auto z = m.embed(b, x, mask).value();
  const auto zp = m.embed(b, xp, mp).value();
  const std::size_t perm[3] = {2, 0, 1};
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(zp.at(j, k), z.at(perm[j], k));
}

TEST(Embed, ZeroInputWithZeroBiasGivesZero) {
  ParamStore store(3);
  IvpVae m(store, fx::small_config(Task::forecast, Backend::ode_rk4));
  Bindings b(store, nullptr);
  const auto z = m.embed(b, Tensor(diff::Shape{2, 2}), Tensor(diff::Shape{2, 2})).value();
  for (double v : z.data()) EXPECT_EQ(v, 0.0);
}

TEST(Embed, MatchesScalarEvaluation) {
  ParamStore store(4);
  IvpVae m(store, fx::small_config(Task::forecast, Backend::resnet_flow, 2, 4));
  fx::randomize(store, 5);
  Bindings b(store, nullptr);
  const auto z = m.embed(b, Tensor::matrix(1, 2, {0.7, 123.0}), Tensor::matrix(1, 2, {1, 0})).value();
  const auto expected = eval_mlp(store, "embed", 2, {0.7, 0.0, 1.0, 0.0});
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(z[k], expected[k], 1e-14);
}

TEST(Encode, SingleStepHasUnitWeight) {
  for (Task task : fx::kAllTasks) {
    ParamStore store(6);
    IvpVae m(store, fx::small_config(task, Backend::ode_rk4));
    fx::randomize(store, 7);
    const auto s = series_of({0.4}, {1.0, -1.0}, 2);
    Bindings b(store, nullptr);
    const auto post = m.encode(b, pack(data::pad_batch({&s})));
    ASSERT_EQ(post.pi.size(), 1u);
    EXPECT_EQ(post.pi[0], 1.0);
  }
}

TEST(Encode, ObservationAtOriginBypassesSolver) {
  for (Backend backend : fx::kAllBackends) {
    ParamStore store(8);
    IvpVae m(store, fx::small_config(Task::classify, backend));
    fx::randomize(store, 9);
    const auto s = series_of({0.0}, {0.3, -0.2}, 2);
    Bindings b(store, nullptr);
    const Packed in = pack(data::pad_batch({&s}));
    const auto post = m.encode(b, in);
    // Head applied directly to the embedding, with no solver in between.
    const auto h = diff::affine(m.embed(b, in.x, in.mask), b(store.index("head.weight")), b(store.index("head.bias")));
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_EQ(post.mu.value()[k], h.value()[k]);
      EXPECT_EQ(post.sigma.value()[k], diff::detail::stable_softplus(h.value()[4 + k]) + kSigmaFloor);
    }
    // Decoding at t₀ is then the reconstruction net on z₀ itself.
    const auto z0 = m.sample_z0(post, SampleMode::eval);
    const auto xhat = m.decode(b, z0, {0.0}, {0});
    std::vector<double> z(z0.value().data().begin(), z0.value().data().end());
    const auto expected = eval_mlp(store, "recon", 2, z);
    for (std::size_t d = 0; d < 2; ++d) EXPECT_NEAR(xhat.value()[d], expected[d], 1e-14);
  }
}

TEST(Encode, ComponentsDependOnlyOnTheirOwnStep) {
  ParamStore store(10);
  IvpVae m(store, fx::small_config(Task::forecast, Backend::ode_dopri5));
  fx::randomize(store, 11);
  const auto full = series_of({0.1, 0.3, 0.5}, {1, 2, 3, 4, 5, 6}, 2);
  const auto part = series_of({0.1, 0.5}, {1, 2, 5, 6}, 2);
  Bindings b(store, nullptr);
  const auto pf = m.encode(b, pack(data::pad_batch({&full})));
  const auto pp = m.encode(b, pack(data::pad_batch({&part})));
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(pp.mu.value().at(0, k), pf.mu.value().at(0, k));
    EXPECT_EQ(pp.mu.value().at(1, k), pf.mu.value().at(2, k));
    EXPECT_EQ(pp.sigma.value().at(1, k), pf.sigma.value().at(2, k));
  }
}

TEST(Encode, BatchedMatchesPerSeries) {
  ParamStore store(12);
  IvpVae m(store, fx::small_config(Task::forecast, Backend::ode_rk4));
  fx::randomize(store, 13);
  std::mt19937_64 rng(14);
  const auto td = fx::random_task_data(rng, Task::forecast, 6, 2);
  Bindings b(store, nullptr);
  std::vector<const data::IrregularSeries*> rows;
  for (const auto& s : td.inputs) rows.push_back(&s);
  const auto batched = m.encode(b, pack(data::pad_batch(rows)));
  std::size_t row = 0;
  for (const auto& s : td.inputs) {
    const auto single = m.encode(b, pack(data::pad_batch({&s})));
    for (std::size_t j = 0; j < s.length(); ++j, ++row) {
      for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(single.mu.value().at(j, k), batched.mu.value().at(row, k), 1e-10);
      EXPECT_NEAR(single.pi[j], batched.pi[row], 1e-10);
    }
  }
}

TEST(Encode, EmptySeriesIsRejected) {
  ParamStore store(15);
  IvpVae m(store, fx::small_config(Task::forecast, Backend::resnet_flow));
  data::IrregularSeries empty;
  empty.num_vars = 2;
  const auto s = series_of({0.2}, {1, 1}, 2);
  Bindings b(store, nullptr);
  EXPECT_THROW((void)m.encode(b, pack(data::pad_batch({&s, &empty}))), DataError);
}

TEST(MixingCoefficients, Schemes) {
  EXPECT_EQ(mixing_coefficients(Task::classify, {9, 1, 3, 2}), (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  EXPECT_EQ(mixing_coefficients(Task::forecast, {1, 3}), (std::vector<double>{0.25, 0.75}));
  const auto sym = mixing_coefficients(Task::forecast, {2, 2, 2});
  for (double p : sym) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
  ScopedLogCapture capture;
  EXPECT_EQ(mixing_coefficients(Task::forecast, {0, 0}), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(capture.warnings.size(), 1u);
}

TEST(SampleZ0, EvalModeIsMixtureMean) {
  ParamStore store(16);
  IvpVae m(store, fx::small_config(Task::forecast, Backend::resnet_flow, 1, 1));
  const auto post = manual_posterior({0.0, 4.0}, {1.0, 1.0}, {0.25, 0.75}, 1);
  EXPECT_EQ(m.sample_z0(post, SampleMode::eval).item(), 3.0);
}

TEST(SampleZ0, FlooredSigmaSingleComponent) {
  ParamStore store(17);
  IvpVae m(store, fx::small_config(Task::forecast, Backend::resnet_flow, 1, 2));
  const auto post = manual_posterior({1.5, -2.0}, {kSigmaFloor, kSigmaFloor}, {1.0}, 2);
  std::mt19937_64 rng(18);
  for (int i = 0; i < 100; ++i) {
    const auto z = m.sample_z0(post, SampleMode::train, &rng).value();
    EXPECT_NEAR(z[0], 1.5, 6 * kSigmaFloor);
    EXPECT_NEAR(z[1], -2.0, 6 * kSigmaFloor);
  }
  EXPECT_THROW((void)m.sample_z0(post, SampleMode::train), ContractError);
}

TEST(SampleZ0, MonteCarloMeanMatchesMixtureMean) {
  ParamStore store(19);
  IvpVae m(store, fx::small_config(Task::forecast, Backend::resnet_flow, 1, 2));
  const auto post = manual_posterior({-1.0, 2.0, 3.0, 0.5, 0.0, -4.0}, {0.5, 1.0, 2.0, 0.1, 1.5, 0.3}, {0.2, 0.5, 0.3}, 2);
  std::mt19937_64 rng(20);
  const int n = 100000;
  double sum[2] = {0, 0};
  for (int i = 0; i < n; ++i) {
    const auto z = m.sample_z0(post, SampleMode::train, &rng).value();
    sum[0] += z[0];
    sum[1] += z[1];
  }
  const auto target = m.sample_z0(post, SampleMode::eval).value();
  for (std::size_t k = 0; k < 2; ++k) {
    double second = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double mu = post.mu.value().at(i, k), s = post.sigma.value().at(i, k);
      second += post.pi[i] * (s * s + mu * mu);
    }
    const double se = std::sqrt((second - target[k] * target[k]) / n);
    EXPECT_NEAR(sum[k] / n, target[k], 3 * se);
  }
}

TEST(Decode, OutputOrderFollowsRequestedTimes) {
  ParamStore store(21);
  IvpVae m(store, fx::small_config(Task::forecast, Backend::ode_rk4));
  fx::randomize(store, 22);
  Bindings b(store, nullptr);
  const auto z0 = diff::constant(Tensor::matrix(2, 4, {0.1, 0.2, -0.3, 0.4, 1.0, -1.0, 0.5, 0.0}));
  const auto a = m.decode(b, z0, {0.3, 0.9, 0.1, 0.5}, {0, 1, 0, 1}).value();
  const auto c = m.decode(b, z0, {0.5, 0.1, 0.9, 0.3}, {1, 0, 1, 0}).value();
  const std::size_t perm[4] = {3, 2, 1, 0};
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t d = 0; d < 2; ++d) EXPECT_EQ(c.at(j, d), a.at(perm[j], d));
}

TEST(Decode, UnionOfTimesEqualsSeparateCalls) {
  for (Backend backend : fx::kAllBackends) {
    ParamStore store(23);
    IvpVae m(store, fx::small_config(Task::forecast, backend));
    fx::randomize(store, 24);
    Bindings b(store, nullptr);
    const auto z0 = diff::constant(Tensor::matrix(1, 4, {0.1, 0.2, -0.3, 0.4}));
    const auto both = m.decode(b, z0, {0.1, 0.4, 0.7, 0.95}, {0, 0, 0, 0}).value();
    const auto in = m.decode(b, z0, {0.1, 0.4}, {0, 0}).value();
    const auto out = m.decode(b, z0, {0.7, 0.95}, {0, 0}).value();
    for (std::size_t d = 0; d < 2; ++d) {
      EXPECT_NEAR(both.at(1, d), in.at(1, d), 1e-12);
      EXPECT_NEAR(both.at(3, d), out.at(1, d), 1e-12);
    }
  }
}

TEST(Classify, ZeroWeightsGiveHalf) {
  ParamStore store(25);
  IvpVae m(store, fx::small_config(Task::classify, Backend::resnet_flow));
  for (std::size_t i = 0; i < store.size(); ++i)
    if (store.name(i).starts_with("classifier.")) std::ranges::fill(store.value(i).data(), 0.0);
  Bindings b(store, nullptr);
  EXPECT_EQ(m.classify(b, diff::constant(Tensor::matrix(1, 4, {3, -2, 1, 5}))).item(), 0.5);
}

TEST(Classify, MonotoneInFinalBiasAndMatchesScalarEvaluation) {
  ParamStore store(26);
  IvpVae m(store, fx::small_config(Task::classify, Backend::resnet_flow));
  fx::randomize(store, 27);
  const std::vector<double> z{0.4, -0.9, 1.3, 0.05};
  const auto zv = diff::constant(Tensor::matrix(1, 4, z));
  double prev = 0.0;
  for (double bias : {-3.0, -1.0, 0.0, 0.5, 2.0}) {
    store.value(store.index("classifier.l1.bias"))[0] = bias;
    Bindings b(store, nullptr);
    const double p = m.classify(b, zv).item();
    EXPECT_GT(p, prev);
    prev = p;
    const double logit = eval_mlp(store, "classifier", 2, z)[0];
    EXPECT_NEAR(p, 1.0 / (1.0 + std::exp(-logit)), 1e-15);
  }
  ParamStore other(28);
  IvpVae no_head(other, fx::small_config(Task::forecast, Backend::resnet_flow));
  Bindings b(other, nullptr);
  EXPECT_THROW((void)no_head.classify(b, zv), ContractError);
}

TEST(Model, ParameterLayoutIndependentOfTask) {
  ParamStore a(29), c(29);
  IvpVae ma(a, fx::small_config(Task::forecast, Backend::ode_rk4));
  IvpVae mc(c, fx::small_config(Task::classify, Backend::ode_rk4));
  ASSERT_LT(a.size(), c.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.name(i), c.name(i));
    EXPECT_EQ(a.value(i), c.value(i));
  }
}

TEST(Properties, PosteriorBounds) {
  const auto r = fx::check_posterior_bounds(27, 100);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(Properties, PermutationInvariance) {
  const auto r = fx::check_permutation_invariance(27, 200);
  EXPECT_TRUE(r.ok()) << r.first_failure << " worst " << r.worst;
}

TEST(Properties, BatchingTransparency) {
  const auto r = fx::check_batching_transparency(18, 300);
  EXPECT_TRUE(r.ok()) << r.first_failure << " worst " << r.worst;
}

TEST(Properties, SeedReproducibility) {
  const auto r = fx::check_seed_reproducibility(9, 400);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(BatchLoss, MatchesHandAssembledObjective) {
  ParamStore store(30);
  IvpVae m(store, fx::small_config(Task::classify, Backend::resnet_flow));
  fx::randomize(store, 31);
  std::mt19937_64 rng(32);
  const auto td = fx::random_task_data(rng, Task::classify, 3, 2);
  const auto batch = make_task_batch(td, {0, 1, 2});
  Bindings b(store, nullptr);
  const auto out = batch_loss(m, b, batch, SampleMode::eval);
  double expected = 0.0;
  for (std::size_t s = 0; s < 3; ++s) {
    const auto one = m.encode(b, pack(data::pad_batch({&td.inputs[s]})));
    const auto z0 = m.sample_z0(one, SampleMode::eval);
    const auto xhat = m.decode(b, z0, td.inputs[s].times, std::vector<std::size_t>(td.inputs[s].length(), 0));
    double ll = 0.0;
    for (std::size_t j = 0; j < td.inputs[s].length(); ++j)
      for (std::size_t d = 0; d < 2; ++d)
        if (td.inputs[s].observed(j, d)) {
          const double r = xhat.value().at(j, d) - td.inputs[s].value(j, d);
          ll += -0.5 * r * r - objectives::kHalfLog2Pi;
        }
    double kl = 0.0;
    for (double k : one.kl.value().data()) kl += k;
    kl /= static_cast<double>(td.inputs[s].length());
    const double p = m.classify(b, z0).item();
    expected += -ll + kl + 100.0 * objectives::cross_entropy(p, *td.inputs[s].label);
  }
  EXPECT_NEAR(out.total.item(), expected / 3.0, 1e-10 * std::abs(expected));
  EXPECT_NEAR(out.report.total, out.report.kl_avg - out.report.recon_ll + 100.0 * out.report.task_term, 1e-9);
}

TEST(BatchLoss, AlphaZeroReducesToVaeObjective) {
  auto cfg = fx::small_config(Task::forecast, Backend::ode_rk4);
  ParamStore store(33);
  IvpVae m(store, cfg);
  fx::randomize(store, 34);
  cfg.alpha = 0.0;
  ParamStore store0(33);
  IvpVae m0(store0, cfg);
  store0.copy_values_from(store);
  std::mt19937_64 rng(35);
  const auto td = fx::random_task_data(rng, Task::forecast, 3, 2);
  const auto batch = make_task_batch(td, {0, 1, 2});
  Bindings b(store, nullptr), b0(store0, nullptr);
  std::mt19937_64 r1(36), r2(36);
  const auto full = batch_loss(m, b, batch, SampleMode::train, &r1);
  const auto vae = batch_loss(m0, b0, batch, SampleMode::train, &r2);
  EXPECT_NEAR(vae.report.total, vae.report.kl_avg - vae.report.recon_ll, 1e-12);
  EXPECT_EQ(full.report.recon_ll, vae.report.recon_ll);
  EXPECT_GT(full.report.total, vae.report.total);
}

TEST(BatchLoss, ClassifierReadsMixtureMeanInTrainMode) {
  ParamStore store(37);
  IvpVae m(store, fx::small_config(Task::classify, Backend::resnet_flow));
  fx::randomize(store, 38);
  std::mt19937_64 rng(39);
  const auto td = fx::random_task_data(rng, Task::classify, 4, 2);
  const auto batch = make_task_batch(td, {0, 1, 2, 3});
  Bindings b(store, nullptr);
  std::mt19937_64 r1(40), r2(41);
  const auto a = batch_loss(m, b, batch, SampleMode::train, &r1);
  const auto c = batch_loss(m, b, batch, SampleMode::train, &r2);
  const auto ev = batch_loss(m, b, batch, SampleMode::eval);
  const auto pa = a.prob.value().data(), pc = c.prob.value().data(), pe = ev.prob.value().data();
  EXPECT_TRUE(std::equal(pa.begin(), pa.end(), pc.begin(), pc.end()));
  EXPECT_TRUE(std::equal(pa.begin(), pa.end(), pe.begin(), pe.end()));
  EXPECT_NE(a.report.recon_ll, c.report.recon_ll);
}

class EndToEndGradient : public ::testing::TestWithParam<std::tuple<Task, Backend>> {};

TEST_P(EndToEndGradient, MatchesFiniteDifferences) {
  const auto [task, backend] = GetParam();
  auto cfg = fx::small_config(task, backend, 2, 4, 6);
  // Accepted step sizes are constants of the backward pass; tight tolerances
  // make their dependence on the parameters invisible to finite differences.
  cfg.solver.atol = cfg.solver.rtol = 1e-10;
  ParamStore store(40);
  IvpVae m(store, cfg);
  fx::randomize(store, 41, 0.5);
  std::mt19937_64 rng(42);
  // L = 3 observations of D = 2 variables, plus a forecast window.
  model::TaskData td;
  td.inputs.push_back(fx::random_series(rng, 2, 3, 0.05, 0.6, "g"));
  td.targets.push_back(fx::random_series(rng, 2, 2, 0.65, 1.0, "g"));
  if (task != Task::forecast) td.targets.clear();
  const auto batch = make_task_batch(td, {0});
  auto loss = [&](Bindings& b) {
    std::mt19937_64 sample_rng(43);
    return batch_loss(m, b, batch, SampleMode::train, &sample_rng).total;
  };
  const auto r = diff::check_gradients_detailed(loss, store);
  EXPECT_LE(r.max_rel_error, 1e-3) << store.name(r.worst_param) << "[" << r.worst_element << "] analytic "
                                   << r.analytic << " numeric " << r.numeric;
}

INSTANTIATE_TEST_SUITE_P(TasksAndBackends, EndToEndGradient,
                         ::testing::Combine(::testing::ValuesIn(fx::kAllTasks), ::testing::ValuesIn(fx::kAllBackends)),
                         [](const auto& info) {
                           return to_string(std::get<0>(info.param)) + "_" + solvers::to_string(std::get<1>(info.param));
                         });

TEST(Checkpoint, RoundTripIsBitExact) {
  for (Backend backend : fx::kAllBackends) {
    data::Manifest manifest{{"a", "b"}, data::NormStats{{0.1, -2.0}, {1.0 / 3.0, 4.0}, {1, 1}, 30.0}, {{"k", "v"}}};
    auto bundle = ModelBundle::create(fx::small_config(Task::classify, backend), manifest, 44);
    fx::randomize(*bundle.params, 45);
    bundle.meta.set("best_epoch", "3");
    const auto path = std::filesystem::temp_directory_path() / "ivpvae_ckpt_test";
    save_checkpoint(bundle, path);
    const auto loaded = load_checkpoint(path);
    std::filesystem::remove(path);
    EXPECT_TRUE(*loaded.params == *bundle.params);
    EXPECT_EQ(loaded.config, bundle.config);
    EXPECT_EQ(loaded.manifest, bundle.manifest);
    EXPECT_EQ(loaded.meta.get("best_epoch"), "3");
    EXPECT_EQ(serialize_checkpoint(loaded), serialize_checkpoint(bundle));
  }
}

TEST(Checkpoint, CorruptionIsReported) {
  auto bundle = ModelBundle::create(fx::small_config(Task::forecast, Backend::resnet_flow), {{"y"}, {}, {}}, 1);
  const std::string good = serialize_checkpoint(bundle);
  EXPECT_THROW((void)parse_checkpoint("not a checkpoint\n"), DataError);
  std::string truncated = good.substr(0, good.size() - 40);
  EXPECT_THROW((void)parse_checkpoint(truncated), DataError);
  std::string renamed = good;
  renamed.replace(renamed.find("embed.l0.weight"), 5, "embex");
  EXPECT_THROW((void)parse_checkpoint(renamed), DataError);
  EXPECT_THROW((void)load_checkpoint("/nonexistent/ckpt"), IoError);
}

TEST(TaskData, ForecastSplitsAtBoundary) {
  data::Dataset ds{{"y"}, {series_of({0.1, 0.5, 0.7, 0.9}, {1, 2, 3, 4}, 1)}};
  const auto td = prepare_task_data(ds, Task::forecast, 0.6);
  EXPECT_EQ(td.inputs[0].times, (std::vector<double>{0.1, 0.5}));
  EXPECT_EQ(td.targets[0].times, (std::vector<double>{0.7, 0.9}));
  EXPECT_THROW((void)prepare_task_data(ds, Task::forecast, 0.95), DataError);
  EXPECT_THROW((void)prepare_task_data(ds, Task::forecast, 0.05), DataError);
  EXPECT_EQ(prepare_task_data(ds, Task::classify, 0.6).inputs[0].length(), 4u);
}
