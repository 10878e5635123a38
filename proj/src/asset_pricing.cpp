#include "fxnet/asset_pricing.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "fxnet/econometrics.hpp"
#include "fxnet/error.hpp"

namespace fxnet {

namespace {

void check_inputs(const Eigen::MatrixXd& rx, const Eigen::MatrixXd& f) {
  if (rx.rows() != f.rows()) throw LengthMismatch("asset pricing: returns and factors differ in length");
  if (!rx.allFinite() || !f.allFinite()) throw DataError("asset pricing: missing cells in returns or factors");
  if (rx.rows() <= rx.cols() + f.cols()) throw DataError("asset pricing: need T > N + k");
}

// Symmetric PSD matrix square root and inverse square root via eigen-decomposition.
Eigen::MatrixXd sym_pow(const Eigen::MatrixXd& m, double power) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = ev[i] > 0.0 ? std::pow(ev[i], power) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

SdfModel gmm_estimate(const Eigen::MatrixXd& rx, const Eigen::MatrixXd& f, const std::vector<std::string>& factor_names) {
  check_inputs(rx, f);
  const Eigen::Index t = rx.rows(), n = rx.cols(), k = f.cols();
  const double td = static_cast<double>(t);
  SdfModel m;
  m.factors = factor_names;
  if (m.factors.empty())
    for (Eigen::Index i = 0; i < k; ++i) m.factors.push_back("f" + std::to_string(i + 1));
  m.t = static_cast<int>(t);
  m.mu_f = f.colwise().mean().transpose();
  const Eigen::MatrixXd fc = f.rowwise() - m.mu_f.transpose();
  m.mean_rx = rx.colwise().mean().transpose();
  m.sigma_f = fc.transpose() * fc / td;
  m.d = rx.transpose() * fc / td;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.d);
  const auto sv = svd.singularValues();
  const double scale = std::sqrt(rx.squaredNorm() / td) * std::sqrt(fc.squaredNorm() / td);
  if (sv.size() >= k && sv[0] <= 1e-14 * scale) {
    // factors carry no covariance with any test asset: minimum-norm solution b = 0
    m.b = Eigen::VectorXd::Zero(k);
    m.lambda = Eigen::VectorXd::Zero(k);
    m.cov_b = m.cov_lambda = Eigen::MatrixXd::Constant(k, k, std::nan(""));
    m.se_b = m.se_lambda = m.t_b = m.t_lambda = Eigen::VectorXd::Constant(k, std::nan(""));
    return m;
  }
  if (sv.size() < k || !(sv[k - 1] > 1e-10 * sv[0])) {
    throw SingularMoments("second-moment matrix of returns and factors is rank deficient");
  }
  const Eigen::MatrixXd dtd = m.d.transpose() * m.d;
  m.b = dtd.ldlt().solve(m.d.transpose() * m.mean_rx);
  m.lambda = m.sigma_f * m.b;

  // stacked moments u_t = [rx_t (1 - b'(f_t - mu)); f_t - mu]
  Eigen::MatrixXd u(t, n + k);
  const Eigen::VectorXd sdf = Eigen::VectorXd::Ones(t) - fc * m.b;
  u.leftCols(n) = rx.array().colwise() * sdf.array();
  u.rightCols(k) = fc;
  const HacEstimate s = nw_hac(demean_columns(u));
  m.lag = s.lag;

  // Jacobian of the mean moments w.r.t. theta = (b, mu)
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n + k, 2 * k);
  jac.topLeftCorner(n, k) = -m.d;
  jac.topRightCorner(n, k) = m.mean_rx * m.b.transpose();
  jac.bottomRightCorner(k, k) = -Eigen::MatrixXd::Identity(k, k);
  Eigen::VectorXd w(n + k);
  w.head(n).setOnes();
  w.tail(k).setConstant(kFactorMeanWeight);
  const Eigen::MatrixXd jw = jac.transpose() * w.asDiagonal();
  const Eigen::MatrixXd bread = (jw * jac).inverse();
  const Eigen::MatrixXd cov_theta = bread * jw * s.long_run_cov * jw.transpose() * bread.transpose() / td;
  m.cov_b = cov_theta.topLeftCorner(k, k);
  m.cov_lambda = m.sigma_f * m.cov_b * m.sigma_f;
  m.se_b = m.cov_b.diagonal().cwiseMax(0.0).cwiseSqrt();
  m.se_lambda = m.cov_lambda.diagonal().cwiseMax(0.0).cwiseSqrt();
  m.t_b = m.b.cwiseQuotient(m.se_b);
  m.t_lambda = m.lambda.cwiseQuotient(m.se_lambda);
  return m;
}

double hj_distance(const Eigen::MatrixXd& rx, const SdfModel& model, Eigen::VectorXd* b_hj) {
  const double td = static_cast<double>(rx.rows());
  const Eigen::MatrixXd g = rx.transpose() * rx / td;
  const Eigen::LDLT<Eigen::MatrixXd> gl(g);
  if (gl.info() != Eigen::Success || !(gl.vectorD().minCoeff() > 0.0)) {
    throw SingularMoments("second-moment matrix of test returns is singular");
  }
  const Eigen::MatrixXd gd = gl.solve(model.d);
  const Eigen::VectorXd gr = gl.solve(model.mean_rx);
  const Eigen::VectorXd b =
      (model.d.transpose() * gd).completeOrthogonalDecomposition().solve(model.d.transpose() * gr);
  if (b_hj) *b_hj = b;
  const Eigen::VectorXd err = model.mean_rx - model.d * b;
  const double q = err.dot(gl.solve(err));
  // rounding residue of an exactly attainable zero
  if (q <= 1e-14 * model.mean_rx.dot(gr)) return 0.0;
  return std::sqrt(q);
}

double weighted_chi2_tail(const Eigen::VectorXd& weights, double stat, int draws, std::uint64_t seed) {
  if (draws <= 0) throw ConfigError("p-value draws must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  int hits = 0;
  for (int i = 0; i < draws; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < weights.size(); ++j) {
      const double e = z(rng);
      s += weights[j] * e * e;
    }
    hits += s >= stat;
  }
  return static_cast<double>(hits) / draws;
}

FitStats fit_stats(const SdfModel& model, const Eigen::MatrixXd& rx, const Eigen::MatrixXd& f, const FitConfig& cfg) {
  check_inputs(rx, f);
  FitStats out;
  const Eigen::Index n = rx.cols();
  out.pricing_errors = model.mean_rx - model.d * model.b;
  const Eigen::VectorXd& a = out.pricing_errors;
  if (cfg.r2_demeaned) {
    const double va = (a.array() - a.mean()).square().sum();
    const double vr = (model.mean_rx.array() - model.mean_rx.mean()).square().sum();
    out.r2 = 1.0 - va / vr;
  } else {
    out.r2 = 1.0 - a.squaredNorm() / model.mean_rx.squaredNorm();
  }
  out.rmse = std::sqrt(a.squaredNorm() / static_cast<double>(n));

  out.hj = hj_distance(rx, model, &out.b_hj);
  const double td = static_cast<double>(rx.rows());
  const Eigen::MatrixXd g = rx.transpose() * rx / td;
  const Eigen::MatrixXd fc = f.rowwise() - model.mu_f.transpose();
  const Eigen::VectorXd sdf = Eigen::VectorXd::Ones(rx.rows()) - fc * out.b_hj;
  const Eigen::MatrixXd u = rx.array().colwise() * sdf.array();
  const Eigen::MatrixXd s = nw_hac(demean_columns(u)).long_run_cov;

  // T HJ^2 -> sum_j w_j chi2(1), w = eig(S^1/2 A' P A S^1/2), A = G^-1/2,
  // P projects off the span of A D.
  const Eigen::MatrixXd ginv_half = sym_pow(g, -0.5);
  const Eigen::MatrixXd ad = ginv_half * model.d;
  const Eigen::MatrixXd p =
      Eigen::MatrixXd::Identity(n, n) - ad * (ad.transpose() * ad).completeOrthogonalDecomposition().solve(ad.transpose());
  const Eigen::MatrixXd s_half = sym_pow(s, 0.5);
  const Eigen::MatrixXd m = s_half * ginv_half * p * ginv_half * s_half;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  out.hj_weights = es.eigenvalues().cwiseMax(0.0);
  out.p_value = weighted_chi2_tail(out.hj_weights, td * out.hj * out.hj, cfg.p_value_draws, cfg.seed);
  return out;
}

PcaResult pca_decomposition(const Eigen::MatrixXd& x, const Eigen::MatrixXd& aux) {
  if (x.cols() < 5) throw std::invalid_argument("pca_decomposition: need at least 5 columns");
  if (aux.size() > 0 && aux.rows() != x.rows()) throw LengthMismatch("pca_decomposition: aux length differs");
  const Eigen::Index m = x.cols();
  const Eigen::MatrixXd xc = demean_columns(x);
  const Eigen::MatrixXd cov = xc.transpose() * xc / static_cast<double>(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  PcaResult r;
  r.eigenvalues = es.eigenvalues().reverse();
  r.loadings = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::Index imax = 0;
    r.loadings.col(i).cwiseAbs().maxCoeff(&imax);
    if (r.loadings(imax, i) < 0.0) r.loadings.col(i) *= -1.0;
  }
  r.cumulative.resize(m);
  const double total = r.eigenvalues.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    acc += r.eigenvalues[i];
    r.cumulative[i] = 100.0 * acc / total;
  }
  r.scores = xc * r.loadings;
  r.aux_correlations.resize(m, aux.cols());
  if (aux.cols() > 0) {
    const Eigen::MatrixXd ac = demean_columns(aux);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < aux.cols(); ++j) {
        const double den = r.scores.col(i).norm() * ac.col(j).norm();
        r.aux_correlations(i, j) = den > 0.0 ? r.scores.col(i).dot(ac.col(j)) / den : std::nan("");
      }
    }
  }
  return r;
}

std::vector<BetaRegression> factor_betas(const Eigen::MatrixXd& rx, const Eigen::MatrixXd& f, Frequency freq) {
  if (rx.rows() != f.rows()) throw LengthMismatch("factor_betas: returns and factors differ in length");
  Eigen::MatrixXd x(f.rows(), f.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(f.cols()) = f;
  std::vector<BetaRegression> out;
  for (Eigen::Index j = 0; j < rx.cols(); ++j) {
    const OlsResult r = ols_hac(rx.col(j), x);
    BetaRegression b;
    b.alpha = r.coef[0] * periods_per_year(freq);
    b.alpha_t = r.t_hac[0];
    b.betas = r.coef.tail(f.cols());
    b.beta_t = r.t_hac.tail(f.cols());
    b.r2 = r.r2;
    b.adj_r2 = r.adj_r2;
    b.residuals = r.residuals;
    b.fitted = rx.col(j) - r.residuals;
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace fxnet
