#include "fxnet/econometrics.hpp"

#include <cmath>
#include <iostream>

#include "fxnet/error.hpp"

namespace fxnet {

Eigen::MatrixXd demean_columns(const Eigen::MatrixXd& x) { return x.rowwise() - x.colwise().mean(); }

int andrews_bandwidth(const Eigen::MatrixXd& data) {
  const Eigen::Index t = data.rows();
  if (t < 2) return 0;
  double num = 0.0, den = 0.0;
  int skipped = 0;
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const Eigen::VectorXd x = data.col(c).array() - data.col(c).mean();
    const Eigen::VectorXd lead = x.tail(t - 1), lagged = x.head(t - 1);
    const double ss = lagged.squaredNorm();
    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    if (!(ss > 1e-20 * scale * scale * static_cast<double>(t))) {
      ++skipped;
      continue;
    }
    double rho = lead.dot(lagged) / ss;
    rho = std::clamp(rho, -0.97, 0.97);
    const double s2 = (lead - rho * lagged).squaredNorm() / static_cast<double>(t - 1);
    if (!(s2 > 0.0)) {
      ++skipped;
      continue;
    }
    const double s4 = s2 * s2;
    num += 4.0 * rho * rho * s4 / (std::pow(1.0 - rho, 6) * std::pow(1.0 + rho, 2));
    den += s4 / std::pow(1.0 - rho, 4);
  }
  if (skipped > 0 && skipped < data.cols()) {
    std::cerr << "warning: andrews_bandwidth skipped " << skipped << " degenerate column(s)\n";
  }
  if (!(den > 0.0)) return 0;
  const double alpha1 = num / den;
  const double st = 1.1447 * std::cbrt(alpha1 * static_cast<double>(t));
  const int lag = static_cast<int>(std::floor(st));
  return std::clamp(lag, 0, static_cast<int>(t - 1));
}

Eigen::MatrixXd second_moment(const Eigen::MatrixXd& x) {
  return x.transpose() * x / static_cast<double>(x.rows());
}

HacEstimate nw_hac(const Eigen::MatrixXd& x, int lag) {
  const Eigen::Index t = x.rows();
  if (lag < 0 || lag >= t) throw std::invalid_argument("nw_hac: lag must be in [0, T)");
  HacEstimate out;
  out.lag = lag;
  out.long_run_cov = second_moment(x);
  for (int j = 1; j <= lag; ++j) {
    const double w = 1.0 - static_cast<double>(j) / (lag + 1);
    const Eigen::MatrixXd gamma = x.bottomRows(t - j).transpose() * x.topRows(t - j) / static_cast<double>(t);
    out.long_run_cov += w * (gamma + gamma.transpose());
  }
  return out;
}

HacEstimate nw_hac(const Eigen::MatrixXd& x) { return nw_hac(x, andrews_bandwidth(x)); }

OlsResult ols_hac(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, int lag) {
  const Eigen::Index t = x.rows(), k = x.cols();
  if (y.size() != t) throw std::invalid_argument("ols_hac: y and X row counts differ");
  if (t <= k) throw RankDeficient("ols_hac: need more observations than regressors");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) throw RankDeficient("ols_hac: regressor matrix is rank deficient");

  OlsResult r;
  r.coef = qr.solve(y);
  r.residuals = y - x * r.coef;
  const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
  const double s2 = r.residuals.squaredNorm() / static_cast<double>(t - k);
  r.cov_ols = s2 * xtx_inv;

  const Eigen::MatrixXd scores = x.array().colwise() * r.residuals.array();
  r.lag = lag >= 0 ? lag : andrews_bandwidth(scores);
  const Eigen::MatrixXd s = nw_hac(scores, std::min<int>(r.lag, static_cast<int>(t - 1))).long_run_cov;
  const Eigen::MatrixXd q_inv = xtx_inv * static_cast<double>(t);
  r.cov_hac = q_inv * s * q_inv / static_cast<double>(t);
  r.se_hac = r.cov_hac.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.t_hac = r.coef.cwiseQuotient(r.se_hac);

  const double tss = (y.array() - y.mean()).square().sum();
  const double rss = r.residuals.squaredNorm();
  r.r2 = tss > 0.0 ? 1.0 - rss / tss : 1.0;
  r.adj_r2 = 1.0 - (1.0 - r.r2) * static_cast<double>(t - 1) / static_cast<double>(t - k);
  return r;
}

double autocorrelation1(const Eigen::VectorXd& x) {
  const Eigen::Index t = x.size();
  if (t < 2) return 0.0;
  const Eigen::VectorXd d = x.array() - x.mean();
  const double den = d.squaredNorm();
  if (!(den > 0.0)) return 0.0;
  return d.tail(t - 1).dot(d.head(t - 1)) / den;
}

Moments describe(const Eigen::VectorXd& x) {
  Moments m;
  const Eigen::Index t = x.size();
  if (t == 0) return m;
  m.mean = x.mean();
  const Eigen::ArrayXd d = x.array() - m.mean;
  const double m2 = d.square().mean();
  m.std = t > 1 ? std::sqrt(d.square().sum() / static_cast<double>(t - 1)) : 0.0;
  if (m2 > 0.0) {
    m.skewness = d.cube().mean() / std::pow(m2, 1.5);
    m.kurtosis = d.square().square().mean() / (m2 * m2);
  } else {
    m.skewness = std::nan("");
    m.kurtosis = std::nan("");
  }
  m.ac1 = autocorrelation1(x);
  return m;
}

}  // namespace fxnet
