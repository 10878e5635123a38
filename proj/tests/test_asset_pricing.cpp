#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "fxnet/asset_pricing.hpp"
#include "fxnet/error.hpp"

using namespace fxnet;
using namespace fxnet::testing;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index t, Eigen::Index n, std::uint64_t seed, double mean = 0.0, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(mean, sd);
  Eigen::MatrixXd x(t, n);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = z(rng);
  return x;
}

// min over scalar b of (r - d b)' G^-1 (r - d b) by ternary search, with an explicit 2x2 inverse.
double brute_force_hj(const Eigen::MatrixXd& rx, const Eigen::VectorXd& f) {
  const double t = static_cast<double>(rx.rows());
  const Eigen::VectorXd fc = f.array() - f.mean();
  const Eigen::Vector2d r = rx.colwise().mean().transpose();
  const Eigen::Vector2d d = rx.transpose() * fc / t;
  const Eigen::Matrix2d g = rx.transpose() * rx / t;
  const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
  Eigen::Matrix2d gi;
  gi << g(1, 1) / det, -g(0, 1) / det, -g(1, 0) / det, g(0, 0) / det;
  auto q = [&](double b) {
    const Eigen::Vector2d e = r - d * b;
    return e.dot(gi * e);
  };
  double lo = -1e4, hi = 1e4;
  for (int i = 0; i < 400; ++i) {
    const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (q(m1) < q(m2)) hi = m2;
    else lo = m1;
  }
  return std::sqrt(q(0.5 * (lo + hi)));
}

}  // namespace

TEST(Gmm, TradableFactorPriceIsItsMean) {
  const Eigen::MatrixXd f = gaussian(600, 1, 1, 0.004, 0.03);
  const SdfModel m = gmm_estimate(f, f, {"net"});
  EXPECT_NEAR(m.lambda[0], f.mean(), 1e-15);
  EXPECT_EQ(m.factors, std::vector<std::string>{"net"});
  EXPECT_GT(m.se_lambda[0], 0.0);
}

TEST(Gmm, LambdaIsSigmaTimesB) {
  const PlantedEconomy e = planted_economy(800, 2);
  const SdfModel m = gmm_estimate(e.rx, e.f);
  EXPECT_LT((m.lambda - m.sigma_f * m.b).cwiseAbs().maxCoeff(), 1e-18);
  EXPECT_EQ(m.factors, (std::vector<std::string>{"f1", "f2"}));
  EXPECT_LT((m.mu_f - e.f.colwise().mean().transpose()).cwiseAbs().maxCoeff(), 1e-18);
  EXPECT_TRUE(m.cov_lambda.isApprox(m.sigma_f * m.cov_b * m.sigma_f));
}

TEST(Gmm, OrthogonalFactorHasZeroPrices) {
  Eigen::MatrixXd rx(8, 2), f(8, 1);
  rx << 0.01, 0.02, 0.01, 0.02, 0.03, -0.01, 0.03, -0.01, 0.01, 0.02, 0.01, 0.02, 0.03, -0.01, 0.03, -0.01;
  f << 1, -1, 1, -1, 1, -1, 1, -1;
  const SdfModel m = gmm_estimate(rx, f);
  EXPECT_EQ(m.b[0], 0.0);
  EXPECT_EQ(m.lambda[0], 0.0);
  EXPECT_TRUE(std::isnan(m.se_lambda[0]));
  const FitStats s = fit_stats(m, rx, f);
  EXPECT_EQ(s.pricing_errors, m.mean_rx);
}

TEST(Gmm, CollinearFactorsAreSingular) {
  const PlantedEconomy e = planted_economy(300, 3);
  Eigen::MatrixXd f(300, 2);
  f << e.f.col(0), 2.0 * e.f.col(0);
  EXPECT_THROW(gmm_estimate(e.rx, f), SingularMoments);
}

TEST(Gmm, InputValidation) {
  const PlantedEconomy e = planted_economy(300, 4);
  EXPECT_THROW(gmm_estimate(e.rx.topRows(200), e.f), LengthMismatch);
  Eigen::MatrixXd bad = e.rx;
  bad(5, 2) = std::nan("");
  EXPECT_THROW(gmm_estimate(bad, e.f), DataError);
  EXPECT_THROW(gmm_estimate(e.rx.topRows(7), e.f.topRows(7)), DataError);
}

TEST(Gmm, PlantedEconomyCoverage) {
  int covered = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const PlantedEconomy e = planted_economy(5000, seed);
    const SdfModel m = gmm_estimate(e.rx, e.f);
    covered += ((m.lambda - e.lambda).cwiseAbs().array() <= 3.0 * m.se_lambda.array()).all();
  }
  EXPECT_GE(covered, 19);
}

TEST(FitStats, PerfectPricing) {
  // test assets are the factors, so k = N and every pricing error is attainable
  const Eigen::MatrixXd f = gaussian(400, 2, 5, 0.004, 0.02);
  const SdfModel m = gmm_estimate(f, f);
  const FitStats s = fit_stats(m, f, f);
  EXPECT_LT(s.pricing_errors.cwiseAbs().maxCoeff(), 1e-16);
  EXPECT_NEAR(s.r2, 1.0, 1e-12);
  EXPECT_LT(s.rmse, 1e-16);
  EXPECT_EQ(s.hj, 0.0);
  EXPECT_EQ(s.p_value, 1.0);
}

TEST(FitStats, ExactlyIdentifiedHjIsZero) {
  const PlantedEconomy e = planted_economy(500, 6);
  const SdfModel m = gmm_estimate(e.rx.leftCols(2), e.f);
  EXPECT_EQ(hj_distance(e.rx.leftCols(2), m), 0.0);
}

TEST(FitStats, HjMatchesBruteForce) {
  for (std::uint64_t seed = 7; seed < 12; ++seed) {
    const PlantedEconomy e = planted_economy(300, seed);
    Eigen::MatrixXd rx = e.rx.leftCols(2);
    rx.col(1).array() += 0.002;  // a mispriced asset so that HJ > 0
    const SdfModel m = gmm_estimate(rx, e.f.leftCols(1));
    const double hj = hj_distance(rx, m);
    EXPECT_GT(hj, 0.0);
    EXPECT_NEAR(hj, brute_force_hj(rx, e.f.col(0)), 1e-8);
  }
}

TEST(FitStats, HjInvariantToAssetOrder) {
  const PlantedEconomy e = planted_economy(500, 12);
  Eigen::MatrixXd rx = e.rx;
  rx.col(4).array() += 0.003;
  Eigen::MatrixXd perm(rx.rows(), 5);
  perm << rx.col(3), rx.col(0), rx.col(4), rx.col(2), rx.col(1);
  const double a = hj_distance(rx, gmm_estimate(rx, e.f.leftCols(1)));
  const double b = hj_distance(perm, gmm_estimate(perm, e.f.leftCols(1)));
  EXPECT_NEAR(a, b, 1e-12 * a);
}

TEST(FitStats, PValueDeterministicAndStable) {
  const PlantedEconomy e = planted_economy(500, 13);
  Eigen::MatrixXd rx = e.rx;
  rx.col(4).array() += 0.0015;
  const SdfModel m = gmm_estimate(rx, e.f);
  FitConfig cfg;
  const FitStats a = fit_stats(m, rx, e.f, cfg), b = fit_stats(m, rx, e.f, cfg);
  EXPECT_EQ(a.p_value, b.p_value);
  EXPECT_GT(a.p_value, 0.0);
  EXPECT_LT(a.p_value, 1.0);
  cfg.p_value_draws = 50'000;
  EXPECT_LT(std::abs(fit_stats(m, rx, e.f, cfg).p_value - a.p_value), 0.02);
  EXPECT_EQ(a.hj_weights.size(), 5);
  EXPECT_GE(a.hj_weights.minCoeff(), 0.0);
}

TEST(FitStats, R2Conventions) {
  const PlantedEconomy e = planted_economy(400, 14);
  const SdfModel m = gmm_estimate(e.rx, e.f.leftCols(1));
  FitConfig cfg;
  const FitStats raw = fit_stats(m, e.rx, e.f.leftCols(1), cfg);
  cfg.r2_demeaned = true;
  const FitStats dm = fit_stats(m, e.rx, e.f.leftCols(1), cfg);
  const Eigen::VectorXd& a = raw.pricing_errors;
  EXPECT_NEAR(raw.r2, 1.0 - a.squaredNorm() / m.mean_rx.squaredNorm(), 1e-15);
  const Eigen::ArrayXd r = m.mean_rx.array() - m.mean_rx.mean();
  EXPECT_NEAR(dm.r2, 1.0 - (a.array() - a.mean()).square().sum() / r.square().sum(), 1e-12);
  EXPECT_NEAR(raw.rmse, std::sqrt(a.squaredNorm() / 5.0), 1e-18);
}

TEST(WeightedChi2, KnownTails) {
  // one unit weight: P(z^2 >= 3.841) = 0.05
  EXPECT_NEAR(weighted_chi2_tail(Eigen::VectorXd::Ones(1), 3.841459, 200'000, 1), 0.05, 0.002);
  EXPECT_EQ(weighted_chi2_tail(Eigen::VectorXd::Zero(3), 0.0, 100, 1), 1.0);
  EXPECT_EQ(weighted_chi2_tail(Eigen::VectorXd::Ones(2), 1e9, 100, 1), 0.0);
  EXPECT_THROW(weighted_chi2_tail(Eigen::VectorXd::Ones(1), 1.0, 0, 1), ConfigError);
}

TEST(Pca, IsotropicNoise) {
  const PcaResult r = pca_decomposition(gaussian(20'000, 5, 15), Eigen::MatrixXd());
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(r.cumulative[i], 20.0 * (i + 1), 1.5);
  EXPECT_NEAR(r.cumulative[4], 100.0, 1e-10);
}

TEST(Pca, PlantedCommonFactor) {
  const Eigen::MatrixXd common = gaussian(1000, 1, 16);
  Eigen::MatrixXd x = gaussian(1000, 5, 17, 0.0, 0.1);
  x.colwise() += common.col(0);
  const PcaResult r = pca_decomposition(x, common);
  EXPECT_GT(r.cumulative[0], 90.0);
  EXPECT_GT(r.loadings.col(0).minCoeff(), 0.0);
  EXPECT_GT(r.aux_correlations(0, 0), 0.99);
  for (Eigen::Index i = 0; i < 5; ++i) {
    Eigen::Index imax = 0;
    r.loadings.col(i).cwiseAbs().maxCoeff(&imax);
    EXPECT_GT(r.loadings(imax, i), 0.0);
  }
}

TEST(Pca, ScoresAreOrthogonal) {
  Eigen::MatrixXd x = gaussian(500, 6, 18);
  x.col(1) += 0.5 * x.col(0);
  x.col(2) -= 0.3 * x.col(1);
  const PcaResult r = pca_decomposition(x, Eigen::MatrixXd());
  const Eigen::MatrixXd c = r.scores.transpose() * r.scores;
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 6; ++j)
      if (i != j) EXPECT_LT(std::abs(c(i, j)) / std::sqrt(c(i, i) * c(j, j)), 1e-10);
  EXPECT_THROW(pca_decomposition(x.leftCols(4), Eigen::MatrixXd()), std::invalid_argument);
}

TEST(FactorBetas, SelfAndPlanted) {
  const Eigen::MatrixXd f = gaussian(600, 2, 19, 0.0, 0.02);
  Eigen::MatrixXd rx(600, 2);
  rx.col(0) = f.col(0);
  rx.col(1) = f.col(0) - 0.5 * f.col(1) + gaussian(600, 1, 20, 0.0, 0.01);
  const auto b = factor_betas(rx, f, Frequency::Monthly);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_NEAR(b[0].betas[0], 1.0, 1e-12);
  EXPECT_NEAR(b[0].betas[1], 0.0, 1e-12);
  EXPECT_NEAR(b[0].alpha, 0.0, 1e-14);
  EXPECT_NEAR(b[0].r2, 1.0, 1e-12);
  const Eigen::Vector2d se = b[1].betas.cwiseQuotient(b[1].beta_t).cwiseAbs();
  EXPECT_LT(std::abs(b[1].betas[0] - 1.0), 3.0 * se[0]);
  EXPECT_LT(std::abs(b[1].betas[1] + 0.5), 3.0 * se[1]);
  EXPECT_LT((b[1].fitted + b[1].residuals - rx.col(1)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FactorBetas, IrrelevantFactorNeverLowersR2) {
  const Eigen::MatrixXd f = gaussian(300, 1, 21, 0.0, 0.02);
  const Eigen::MatrixXd rx = 0.8 * f + gaussian(300, 1, 22, 0.0, 0.02);
  Eigen::MatrixXd f2(300, 2);
  f2 << f, gaussian(300, 1, 23, 0.0, 0.02);
  const auto one = factor_betas(rx, f, Frequency::Monthly), two = factor_betas(rx, f2, Frequency::Monthly);
  EXPECT_GE(two[0].r2, one[0].r2);
  EXPECT_LT(std::abs(two[0].betas[0] - one[0].betas[0]), 3.0 * std::abs(one[0].betas[0] / one[0].beta_t[0]));
}
