#include "fxnet/qbll.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "fxnet/error.hpp"
#include "fxnet/parallel.hpp"

namespace fxnet {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

void QbllConfig::validate() const {
  if (lags < 1) throw ConfigError("qbll: lags must be >= 1");
  if (!(shrinkage > 0.0)) throw ConfigError("qbll: shrinkage must be > 0");
  if (n_draws < 1) throw ConfigError("qbll: n_draws must be >= 1");
  if (bandwidth != 0.0 && !(bandwidth >= 1.0)) throw ConfigError("qbll: bandwidth must be >= 1 (or 0 for auto)");
}

double resolve_bandwidth(const QbllConfig& cfg, Eigen::Index t) {
  if (cfg.bandwidth > 0.0) return cfg.bandwidth;
  return std::ceil(std::sqrt(static_cast<double>(std::max<Eigen::Index>(t, 1))));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

KernelWeights kernel_weights_at(Eigen::Index k, const Eigen::VectorXi& positions, double bandwidth) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kernel_weights: bandwidth must be positive");
  KernelWeights w;
  w.raw.resize(positions.size());
  for (Eigen::Index i = 0; i < positions.size(); ++i) {
    const double z = static_cast<double>(k - positions[i]) / bandwidth;
    w.raw[i] = kInvSqrt2Pi * std::exp(-0.5 * z * z);
  }
  const double total = w.raw.sum();
  if (!(total > 0.0)) throw NumericalError("kernel weights underflow; bandwidth too small for the sample");
  w.normalized = w.raw * (static_cast<double>(positions.size()) / total);
  w.effective_sum = w.normalized.sum();
  return w;
}

KernelWeights kernel_weights(Eigen::Index k, Eigen::Index t, double bandwidth) {
  if (k < 0 || k >= t) throw std::out_of_range("kernel_weights: target index outside the sample");
  return kernel_weights_at(k, Eigen::VectorXi::LinSpaced(t, 0, static_cast<int>(t - 1)), bandwidth);
}

void NwPrior::validate() const {
  const auto n = scale.rows();
  if (coef_mean.cols() != n || precision.rows() != coef_mean.rows() || precision.cols() != coef_mean.rows()) {
    throw std::invalid_argument("NwPrior: inconsistent dimensions");
  }
  if (!(dof > static_cast<double>(n) - 1.0)) throw std::invalid_argument("NwPrior: dof must exceed N - 1");
}

NwPrior minnesota_prior(int n, int lags, const QbllConfig& cfg, const Eigen::VectorXd& residual_variances) {
  if (n < 1 || lags < 1) throw std::invalid_argument("minnesota_prior: need N >= 1 and p >= 1");
  if (residual_variances.size() != n) throw std::invalid_argument("minnesota_prior: need one variance per series");
  const int k = 1 + n * lags;
  NwPrior prior;
  prior.coef_mean = Eigen::MatrixXd::Zero(k, n);
  for (int i = 0; i < n; ++i) prior.coef_mean(1 + i, i) = cfg.first_lag_center;
  prior.precision = Eigen::MatrixXd::Zero(k, k);
  prior.precision(0, 0) = kInterceptPrecision;
  const double phi2 = cfg.shrinkage * cfg.shrinkage;
  for (int l = 1; l <= lags; ++l) {
    for (int j = 0; j < n; ++j) {
      prior.precision(1 + (l - 1) * n + j, 1 + (l - 1) * n + j) = l * l * residual_variances[j] / phi2;
    }
  }
  prior.dof = n + 2.0;
  prior.scale = residual_variances.asDiagonal();
  return prior;
}

NwPrior diffuse_prior(int n, int lags) {
  const int k = 1 + n * lags;
  NwPrior prior;
  prior.coef_mean = Eigen::MatrixXd::Zero(k, n);
  prior.precision = Eigen::MatrixXd::Zero(k, k);
  prior.dof = n + 2.0;
  prior.scale = Eigen::MatrixXd::Zero(n, n);
  return prior;
}

VarDesign build_design(const Eigen::MatrixXd& panel, int lags) {
  const Eigen::Index t = panel.rows(), n = panel.cols();
  std::vector<Eigen::Index> rows;
  auto row_ok = [&](Eigen::Index r) { return panel.row(r).allFinite(); };
  for (Eigen::Index r = lags; r < t; ++r) {
    bool ok = row_ok(r);
    for (int l = 1; ok && l <= lags; ++l) ok = row_ok(r - l);
    if (ok) rows.push_back(r);
  }
  VarDesign d;
  const auto nr = static_cast<Eigen::Index>(rows.size());
  d.regressors.resize(nr, 1 + n * lags);
  d.targets.resize(nr, n);
  d.positions.resize(nr);
  for (Eigen::Index i = 0; i < nr; ++i) {
    const Eigen::Index r = rows[static_cast<std::size_t>(i)];
    d.positions[i] = static_cast<int>(r);
    d.targets.row(i) = panel.row(r);
    d.regressors(i, 0) = 1.0;
    for (int l = 1; l <= lags; ++l) d.regressors.block(i, 1 + (l - 1) * n, 1, n) = panel.row(r - l);
  }
  return d;
}

Eigen::VectorXd ar_residual_variances(const Eigen::MatrixXd& y, int lags) {
  Eigen::VectorXd out(y.cols());
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    const VarDesign d = build_design(y.col(j), lags);
    const Eigen::Index r = d.targets.rows();
    if (r <= lags + 1) {
      out[j] = std::nan("");
      continue;
    }
    const Eigen::VectorXd beta = d.regressors.colPivHouseholderQr().solve(d.targets.col(0));
    out[j] = (d.targets.col(0) - d.regressors * beta).squaredNorm() / static_cast<double>(r - lags - 1);
  }
  return out;
}

Eigen::MatrixXd PosteriorState::sigma_mean() const {
  const double denom = dof - static_cast<double>(n()) - 1.0;
  return scale / (denom > 0.0 ? denom : dof);
}

PosteriorState qbll_posterior(const VarDesign& design, Eigen::Index k, const NwPrior& prior,
                              const KernelWeights& weights, int lags) {
  prior.validate();
  const Eigen::MatrixXd& a = design.regressors;
  const Eigen::MatrixXd& y = design.targets;
  if (a.rows() < lags + 1 || weights.normalized.size() != a.rows()) {
    throw SingularDesign("qbll_posterior: too few usable observations");
  }
  const Eigen::VectorXd& rho = weights.normalized;
  const Eigen::MatrixXd ad = a.transpose() * rho.asDiagonal();
  const Eigen::MatrixXd xtx = symmetrize(ad * a);

  // collinearity check independent of the units of each column
  const Eigen::VectorXd diag = xtx.diagonal();
  if (!(diag.minCoeff() > 0.0)) throw SingularDesign("qbll_posterior: regressor with zero weighted variation");
  const Eigen::VectorXd inv_sd = diag.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = inv_sd.asDiagonal() * xtx * inv_sd.asDiagonal();
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(scaled, Eigen::EigenvaluesOnly).eigenvalues();
  if (!(ev.minCoeff() > 0.0) || ev.maxCoeff() / ev.minCoeff() > kMaxDesignCondition) {
    throw SingularDesign("qbll_posterior: weighted design is numerically singular (bandwidth too small or degenerate data)");
  }

  PosteriorState s;
  s.index = k;
  s.lags = lags;
  s.precision = symmetrize(prior.precision + xtx);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(s.precision);
  s.coef_mean = ldlt.solve(ad * y + prior.precision * prior.coef_mean);
  s.dof = prior.dof + rho.sum();
  const Eigen::MatrixXd resid = y - a * s.coef_mean;
  const Eigen::MatrixXd dev = s.coef_mean - prior.coef_mean;
  s.scale = symmetrize(prior.scale + resid.transpose() * rho.asDiagonal() * resid +
                       dev.transpose() * prior.precision * dev);
  return s;
}

VarParams to_var_params(const Eigen::MatrixXd& coef, const Eigen::MatrixXd& sigma, int lags) {
  const Eigen::Index n = coef.cols();
  VarParams v;
  v.intercept = coef.row(0).transpose();
  v.lag_coefs.reserve(static_cast<std::size_t>(lags));
  for (int l = 1; l <= lags; ++l) v.lag_coefs.push_back(coef.block(1 + (l - 1) * n, 0, n, n).transpose());
  v.sigma = sigma;
  return v;
}

double spectral_radius(const std::vector<Eigen::MatrixXd>& lag_coefs) {
  if (lag_coefs.empty()) return 0.0;
  const Eigen::Index n = lag_coefs.front().rows();
  const Eigen::Index p = static_cast<Eigen::Index>(lag_coefs.size());
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n * p, n * p);
  for (Eigen::Index l = 0; l < p; ++l) companion.block(0, l * n, n, n) = lag_coefs[static_cast<std::size_t>(l)];
  if (p > 1) companion.block(n, 0, n * (p - 1), n * (p - 1)).setIdentity();
  return Eigen::EigenSolver<Eigen::MatrixXd>(companion, false).eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<VarParams> sample_posterior(const PosteriorState& state, int n_draws, std::uint64_t seed) {
  const Eigen::Index n = state.coef_mean.cols(), k = state.coef_mean.rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Eigen::MatrixXd scale_inv = state.scale.llt().solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::LLT<Eigen::MatrixXd> scale_inv_chol(symmetrize(scale_inv));
  if (scale_inv_chol.info() != Eigen::Success) throw NumericalError("sample_posterior: posterior scale not PD");
  const Eigen::MatrixXd l_w = scale_inv_chol.matrixL();
  const Eigen::MatrixXd xi_inv = state.precision.llt().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::LLT<Eigen::MatrixXd> xi_chol(symmetrize(xi_inv));
  if (xi_chol.info() != Eigen::Success) throw NumericalError("sample_posterior: posterior precision not PD");
  const Eigen::MatrixXd l_xi = xi_chol.matrixL();

  std::vector<VarParams> out;
  out.reserve(static_cast<std::size_t>(n_draws));
  for (int d = 0; d < n_draws; ++d) {
    // Bartlett decomposition of Wishart(dof, scale^{-1}) for the precision
    Eigen::MatrixXd bart = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::chi_squared_distribution<double> chi(state.dof - static_cast<double>(i));
      bart(i, i) = std::sqrt(chi(rng));
      for (Eigen::Index j = 0; j < i; ++j) bart(i, j) = normal(rng);
    }
    const Eigen::MatrixXd lb = l_w * bart;
    const Eigen::MatrixXd prec = lb * lb.transpose();
    const Eigen::MatrixXd sigma = symmetrize(prec.llt().solve(Eigen::MatrixXd::Identity(n, n)));
    const Eigen::LLT<Eigen::MatrixXd> sigma_chol(sigma);

    Eigen::MatrixXd z(k, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < k; ++i) z(i, j) = normal(rng);
    const Eigen::MatrixXd coef = state.coef_mean + l_xi * z * Eigen::MatrixXd(sigma_chol.matrixL()).transpose();
    out.push_back(to_var_params(coef, sigma, state.lags));
  }
  return out;
}

TvpVarPath estimate_path(const CivPanel& panel, const std::vector<Eigen::Index>& positions, const QbllConfig& cfg,
                         int threads) {
  cfg.validate();
  const Eigen::Index t = panel.values.rows();
  if (static_cast<Eigen::Index>(panel.dates.size()) != t ||
      static_cast<Eigen::Index>(panel.currencies.size()) != panel.values.cols()) {
    throw std::invalid_argument("estimate_path: panel dimensions inconsistent");
  }
  for (Eigen::Index k : positions) {
    if (k < 0 || k >= t) throw std::out_of_range("estimate_path: requested date index outside the sample");
  }
  Eigen::MatrixXd data = panel.values;
  if (cfg.log_levels) data = data.array().log().matrix();
  const double bw = resolve_bandwidth(cfg, t);
  const auto reach = static_cast<Eigen::Index>(std::isfinite(bw) ? std::ceil(3.0 * bw) : static_cast<double>(t));

  TvpVarPath path;
  path.currencies = panel.currencies;
  path.config = cfg;
  path.estimates.resize(positions.size());

  parallel_for(positions.size(), threads, [&](std::size_t idx) {
    const Eigen::Index k = positions[idx];
    DateEstimate& est = path.estimates[idx];
    est.index = k;
    est.date = panel.dates[static_cast<std::size_t>(k)];
    est.bandwidth = bw;
    try {
      const Eigen::Index lo = std::max<Eigen::Index>(0, k - reach);
      const Eigen::Index hi = std::min<Eigen::Index>(t - 1, k + reach);
      for (Eigen::Index c = 0; c < data.cols(); ++c) {
        if (data.col(c).segment(lo, hi - lo + 1).allFinite()) est.active.push_back(static_cast<int>(c));
      }
      if (est.active.empty()) throw SingularDesign("no currency observed throughout the kernel window");
      const int n = static_cast<int>(est.active.size());
      Eigen::MatrixXd sub(t, n);
      for (int j = 0; j < n; ++j) sub.col(j) = data.col(est.active[static_cast<std::size_t>(j)]);

      const VarDesign design = build_design(sub, cfg.lags);
      if (design.targets.rows() <= 1 + n * cfg.lags) throw SingularDesign("too few usable observations");
      const KernelWeights w = kernel_weights_at(k, design.positions, bw);
      // Minnesota scales from the same rows the system uses
      Eigen::VectorXd s2(n);
      {
        const Eigen::Index r = design.targets.rows();
        for (int j = 0; j < n; ++j) {
          Eigen::MatrixXd x(r, 1 + cfg.lags);
          x.col(0).setOnes();
          for (int l = 1; l <= cfg.lags; ++l) x.col(l) = design.regressors.col(1 + (l - 1) * n + j);
          const Eigen::VectorXd b = x.colPivHouseholderQr().solve(design.targets.col(j));
          s2[j] = (design.targets.col(j) - x * b).squaredNorm() / static_cast<double>(r - cfg.lags - 1);
        }
      }
      const NwPrior prior = minnesota_prior(n, cfg.lags, cfg, s2);
      const PosteriorState post = qbll_posterior(design, k, prior, w, cfg.lags);
      if (!(s2.minCoeff() > 0.0)) throw SingularDesign("series with zero residual variance");
      est.dof = post.dof;
      est.point = to_var_params(post.coef_mean, post.sigma_mean(), cfg.lags);
      est.spectral_radius = spectral_radius(est.point.lag_coefs);
      if (cfg.mode == PosteriorMode::Draws) {
        est.draws = sample_posterior(post, cfg.n_draws, mix_seed(cfg.seed, static_cast<std::uint64_t>(k)));
      }
    } catch (const SingularDesign& e) {
      throw SingularDesign("date " + est.date.str() + ": " + e.what());
    }
  });
  return path;
}

}  // namespace fxnet
