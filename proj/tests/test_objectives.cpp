#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ivpvae/diffcore/gradcheck.hpp"
#include "ivpvae/objectives/losses.hpp"

using namespace ivpvae;
using namespace ivpvae::diff;
using namespace ivpvae::objectives;

namespace {

Var row(std::vector<double> v) { return constant(Tensor::matrix(1, v.size(), v)); }

}  // namespace

TEST(KlDiagGauss, ClosedFormCases) {
  EXPECT_EQ(kl_diag_gauss(std::vector<double>{0, 0}, std::vector<double>{1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(kl_diag_gauss(std::vector<double>{1}, std::vector<double>{1}), 0.5);
  EXPECT_EQ(kl_diag_gauss(row({0, 0}), row({1, 1})).item(), 0.0);
  EXPECT_DOUBLE_EQ(kl_diag_gauss(row({1}), row({1})).item(), 0.5);
  EXPECT_THROW((void)kl_diag_gauss(std::vector<double>{0}, std::vector<double>{0}), ContractError);
}

TEST(KlDiagGauss, MonteCarloOracleForWideGaussian) {
  // E_q[log q(z) - log p(z)] with q = N(0, 4), p = N(0, 1).
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> q(0.0, 2.0);
  const int n = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = q(rng);
    const double log_ratio = -std::log(2.0) - z * z / 8.0 + z * z / 2.0;
    sum += log_ratio;
    sum_sq += log_ratio * log_ratio;
  }
  const double mc = sum / n;
  const double se = std::sqrt((sum_sq / n - mc * mc) / n);
  const double kl = kl_diag_gauss(std::vector<double>{0}, std::vector<double>{2});
  EXPECT_NEAR(kl, mc, 3 * se);
  EXPECT_NEAR(kl, 0.806853, 1e-6);
}

TEST(KlDiagGauss, NonNegativeOnRandomInputs) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> mu(-5, 5), log_sigma(-9, 3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> m(4), s(4);
    for (int k = 0; k < 4; ++k) {
      m[k] = mu(rng);
      s[k] = std::exp(log_sigma(rng));
    }
    const double kl = kl_diag_gauss(m, s);
    EXPECT_GE(kl, 0.0);
    EXPECT_NEAR(kl_diag_gauss(row(m), row(s)).item(), kl, 1e-12 * std::max(1.0, kl));
  }
}

TEST(ReconLoglik, PlugInValues) {
  const Tensor one = Tensor::matrix(1, 1, {1.0});
  EXPECT_NEAR(recon_loglik(row({3.0}), Tensor::matrix(1, 1, {3.0}), one).item(), -0.918939, 1e-6);
  EXPECT_NEAR(recon_loglik(row({3.0}), Tensor::matrix(1, 1, {1.0}), one).item(), -2.0 - 0.918939, 1e-6);
  EXPECT_EQ(recon_loglik(row({3.0, 4.0}), Tensor::matrix(1, 2, {0.0, 7.0}), Tensor::matrix(1, 2, {0, 0})).item(), 0.0);
  EXPECT_THROW((void)recon_loglik(row({1.0}), Tensor::matrix(1, 2, {0, 0}), Tensor::matrix(1, 2, {0, 0})),
               ContractError);
}

TEST(ReconLoglik, IgnoresMaskedEntries) {
  const Tensor mask = Tensor::matrix(2, 2, {1, 0, 0, 1});
  const Var a = recon_loglik(constant(Tensor::matrix(2, 2, {1, 100, -50, 2})), Tensor::matrix(2, 2, {0, 0, 0, 0}), mask);
  const Var b = recon_loglik(constant(Tensor::matrix(2, 2, {1, -3, 8, 2})), Tensor::matrix(2, 2, {0, 9, 1, 0}), mask);
  EXPECT_EQ(a.item(), b.item());
}

TEST(LossVae, CompositionCases) {
  const std::size_t n = 5;
  const LossReport at_prior = combine(-static_cast<double>(n) * kHalfLog2Pi, 0.0, 0.0, 1.0, n);
  EXPECT_DOUBLE_EQ(at_prior.total, n * 0.5 * std::log(2 * std::numbers::pi));
  const double kl_avg = (0.5 + 1.5) / 2.0;
  EXPECT_EQ(combine(0.0, kl_avg, 0.0, 1.0, 0).kl_avg, 1.0);
}

TEST(LossVae, SmallInstanceMatchesScalarRecomputation) {
  // K = 2, L = 2 components; reconstruction of a 2 x 2 block with one missing entry.
  const std::vector<double> mu{0.3, -0.8, 1.2, 0.1};
  const std::vector<double> sigma{0.5, 1.3, 0.9, 2.0};
  const std::vector<double> xhat{0.2, -1.0, 0.7, 0.4};
  const std::vector<double> x{0.0, -0.5, 1.5, 9.0};
  const std::vector<double> mask{1, 1, 1, 0};

  double kl_sum = 0.0;
  for (int i = 0; i < 4; ++i)
    kl_sum += 0.5 * (mu[i] * mu[i] + sigma[i] * sigma[i] - 1.0 - std::log(sigma[i] * sigma[i]));
  double ll = 0.0;
  for (int i = 0; i < 4; ++i)
    if (mask[i] != 0) ll += -0.5 * (xhat[i] - x[i]) * (xhat[i] - x[i]) - 0.5 * std::log(2 * std::numbers::pi);
  const double expected = -ll + kl_sum / 2.0;

  const Var kl = kl_diag_gauss(constant(Tensor::matrix(2, 2, mu)), constant(Tensor::matrix(2, 2, sigma)));
  const Var rl = recon_loglik(constant(Tensor::matrix(2, 2, xhat)), Tensor::matrix(2, 2, x), Tensor::matrix(2, 2, mask));
  const LossReport r = combine(rl.item(), mean(kl).item(), 0.0, 0.0, 3);
  EXPECT_NEAR(r.total, expected, 1e-13);
  EXPECT_NEAR(r.total, 4.375813725209186, 1e-12);
}

TEST(LossForecast, MseCases) {
  const Tensor mask = Tensor::matrix(1, 2, {1, 1});
  EXPECT_EQ(forecast_mse(row({1, 2}), Tensor::matrix(1, 2, {1, 2}), mask).item(), 0.0);
  EXPECT_EQ(forecast_mse(row({1, -1}), Tensor::matrix(1, 2, {0, 0}), mask).item(), 1.0);
  EXPECT_THROW((void)forecast_mse(row({1, -1}), Tensor::matrix(1, 2, {0, 0}), Tensor::matrix(1, 2, {0, 0})),
               DataError);
}

TEST(LossForecast, AlphaZeroAndMonotonicity) {
  const double recon = -3.5, kl = 0.7, task = 0.4;
  const LossReport vae = combine(recon, kl, 0.0, 0.0, 4);
  EXPECT_EQ(combine(recon, kl, task, 0.0, 4).total, vae.total);
  double prev = vae.total;
  for (double alpha : {0.1, 1.0, 5.0, 100.0}) {
    const double total = combine(recon, kl, task, alpha, 4).total;
    EXPECT_GT(total, prev);
    prev = total;
  }
  EXPECT_THROW((void)combine(recon, kl, task, -1.0, 4), ContractError);
}

TEST(LossClassify, CrossEntropyCases) {
  EXPECT_LE(cross_entropy(1.0, 1), 1e-6);
  EXPECT_DOUBLE_EQ(cross_entropy(0.5, 0), std::log(2.0));
  EXPECT_NEAR(cross_entropy(0.25, 1), 1.386294, 1e-6);
  EXPECT_TRUE(std::isfinite(cross_entropy(0.0, 1)));
  const Var ce = cross_entropy(constant(Tensor::column(std::vector<double>{1.0, 0.5, 0.25})),
                               Tensor::column(std::vector<double>{1, 0, 1}));
  EXPECT_LE(ce.value()[0], 1e-6);
  EXPECT_DOUBLE_EQ(ce.value()[1], std::log(2.0));
  EXPECT_DOUBLE_EQ(ce.value()[2], std::log(4.0));
}

TEST(Losses, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    ParamStore store(seed);
    auto rand_tensor = [&](std::size_t r, std::size_t c, double offset) {
      Tensor t(Shape{r, c});
      for (double& v : t.data()) v = u(rng) + offset;
      return t;
    };
    const auto mu = store.add("mu", rand_tensor(3, 2, 0.0));
    const auto sigma = store.add("sigma", rand_tensor(3, 2, 1.5));
    const auto xhat = store.add("xhat", rand_tensor(3, 2, 0.0));
    const auto logit = store.add("logit", rand_tensor(3, 1, 0.0));
    const Tensor x = rand_tensor(3, 2, 0.0);
    const Tensor mask = Tensor::matrix(3, 2, {1, 0, 1, 1, 0, 1});
    const Tensor y = Tensor::column(std::vector<double>{1, 0, 1});
    auto loss = [&](Bindings& b) {
      const Var kl = mean(kl_diag_gauss(b(mu), b(sigma)));
      const Var rl = recon_loglik(b(xhat), x, mask);
      const Var mse = forecast_mse(b(xhat), x, mask);
      const Var ce = mean(cross_entropy(sigmoid(b(logit)), y));
      return kl - rl + 2.0 * mse + 3.0 * ce;
    };
    EXPECT_LE(check_gradients(loss, store), 1e-6) << "seed " << seed;
  }
}
