#pragma once

#include <Eigen/Dense>
#include <string>

namespace fxnet {

struct HacEstimate {
  Eigen::MatrixXd long_run_cov;
  int lag = 0;
  std::string kernel = "bartlett";
};

// Andrews (1991) AR(1) plug-in for the Bartlett kernel, averaged over columns:
// S_T = 1.1447 * (alpha1 * T)^(1/3), lag = floor(S_T). Columns with (near) zero
// variance are skipped; if every column is degenerate the lag is 0.
int andrews_bandwidth(const Eigen::MatrixXd& data);
inline int andrews_bandwidth(const Eigen::VectorXd& series) { return andrews_bandwidth(Eigen::MatrixXd(series)); }

// Newey-West long-run covariance of T x m data that the caller has already
// demeaned: Gamma_0 + sum_j (1 - j/(lag+1)) (Gamma_j + Gamma_j'), Gamma_j = (1/T) sum x_t x_{t-j}'.
HacEstimate nw_hac(const Eigen::MatrixXd& demeaned, int lag);

// Convenience: nw_hac with the Andrews lag.
HacEstimate nw_hac(const Eigen::MatrixXd& demeaned);

// 1/T sample covariance of already-demeaned data; nw_hac(x, 0) returns exactly this.
Eigen::MatrixXd second_moment(const Eigen::MatrixXd& x);

struct OlsResult {
  Eigen::VectorXd coef;
  Eigen::MatrixXd cov_hac;   // sandwich with Newey-West scores
  Eigen::MatrixXd cov_ols;   // homoskedastic, for comparison
  Eigen::VectorXd se_hac;
  Eigen::VectorXd t_hac;
  Eigen::VectorXd residuals;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  int lag = 0;
};

// OLS of y on X (X supplies its own intercept column if wanted). Throws
// RankDeficient when X lacks full column rank. lag < 0 picks the Andrews lag
// from the score contributions.
OlsResult ols_hac(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, int lag = -1);

struct Moments {
  double mean = 0, std = 0, skewness = 0, kurtosis = 0, ac1 = 0;  // std uses T-1; kurtosis is raw (normal = 3)
};
Moments describe(const Eigen::VectorXd& x);

// Lag-1 sample autocorrelation.
double autocorrelation1(const Eigen::VectorXd& x);

Eigen::MatrixXd demean_columns(const Eigen::MatrixXd& x);

}  // namespace fxnet
