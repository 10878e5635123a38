#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fxnet/market_data.hpp"

namespace fxnet {

// Linear SDF M = 1 - b'(f - mu_f) estimated by one-step GMM with moments
// E[(1 - b'(f - mu_f)) rx] = 0 and E[f - mu_f] = 0, weighted diag(I_N, W I_k).
struct SdfModel {
  std::vector<std::string> factors;
  Eigen::VectorXd b, mu_f, lambda;
  Eigen::MatrixXd sigma_f;   // 1/T factor covariance
  Eigen::MatrixXd d;         // N x k, E[rx (f - mu_f)']
  Eigen::VectorXd mean_rx;   // N
  Eigen::MatrixXd cov_b, cov_lambda;
  Eigen::VectorXd se_b, se_lambda, t_b, t_lambda;
  int lag = 0;
  int t = 0;
};

inline constexpr double kFactorMeanWeight = 1e6;

// rx is T x N test assets, f is T x k factors. Throws SingularMoments when D is
// rank deficient, LengthMismatch on misaligned inputs, DataError on NaN cells
// or T <= N + k.
SdfModel gmm_estimate(const Eigen::MatrixXd& rx, const Eigen::MatrixXd& f,
                      const std::vector<std::string>& factor_names = {});

struct FitConfig {
  int p_value_draws = 5000;
  std::uint64_t seed = 20240101;
  bool r2_demeaned = false;  // default R2 = 1 - sum(alpha^2) / sum(mean_rx^2)
};

struct FitStats {
  double r2 = 0.0;      // fraction, not percent
  double rmse = 0.0;    // per period, decimal
  double hj = 0.0;
  double p_value = 1.0;
  Eigen::VectorXd pricing_errors;  // mean rx - D b
  Eigen::VectorXd b_hj;            // SDF loadings minimizing the HJ quadratic form
  Eigen::VectorXd hj_weights;      // weights of the chi-square(1) mixture
};

// HJ^2 = min_b g(b)' G^{-1} g(b), g(b) = mean_rx - D b, G = rx'rx / T.
// Closed form; returns HJ (not squared) and the minimizer in b_hj.
double hj_distance(const Eigen::MatrixXd& rx, const SdfModel& model, Eigen::VectorXd* b_hj = nullptr);

FitStats fit_stats(const SdfModel& model, const Eigen::MatrixXd& rx, const Eigen::MatrixXd& f, const FitConfig& cfg = {});

// P(sum_j w_j z_j^2 >= stat) by simulation with a fixed seed.
double weighted_chi2_tail(const Eigen::VectorXd& weights, double stat, int draws, std::uint64_t seed);

struct PcaResult {
  Eigen::VectorXd eigenvalues;       // descending
  Eigen::MatrixXd loadings;          // m x m, column i = PC i, largest |entry| positive
  Eigen::VectorXd cumulative;        // percent of total variance
  Eigen::MatrixXd scores;            // T x m, demeaned data times loadings
  Eigen::MatrixXd aux_correlations;  // m x q
};

// x is T x m (m >= 5), aux is T x q (q may be 0).
PcaResult pca_decomposition(const Eigen::MatrixXd& x, const Eigen::MatrixXd& aux);

struct BetaRegression {
  double alpha = 0.0;  // annualized, decimal
  double alpha_t = 0.0;
  Eigen::VectorXd betas, beta_t;
  double r2 = 0.0, adj_r2 = 0.0;
  Eigen::VectorXd fitted, residuals;
};

// One time-series regression with intercept per column of rx.
std::vector<BetaRegression> factor_betas(const Eigen::MatrixXd& rx, const Eigen::MatrixXd& f, Frequency freq);

}  // namespace fxnet
