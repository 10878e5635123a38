#pragma once

// Time-varying-parameter VAR estimated by quasi-Bayesian local likelihood:
// Gaussian kernel re-weighting of the sample around each target date combined
// with a conjugate Minnesota Normal-Wishart prior, giving analytic per-date
// posteriors that can be sampled directly (no MCMC).
//
// Conventions: coefficient matrices are stored in the stacked regression form
// Y = A * Phi + E with regressor rows x_t = (1, y_{t-1}', ..., y_{t-p}'), so Phi is
// (1 + N p) x N and column i holds equation i. Sigma is the error covariance.
// Conditional on Sigma, vec(Phi) ~ N(vec(Phi_mean), Sigma (x) Xi^{-1}) and
// Sigma ~ inverse-Wishart(dof, scale); equivalently Sigma^{-1} ~ Wishart(dof, scale^{-1}).

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fxnet/date.hpp"

namespace fxnet {

enum class PosteriorMode { Point, Draws };

struct QbllConfig {
  int lags = 2;
  double shrinkage = 0.05;         // Minnesota overall tightness
  double first_lag_center = 0.1;   // prior mean on each own first lag
  int n_draws = 500;
  double bandwidth = 0.0;          // kernel width in observations; 0 selects ceil(sqrt(T))
  std::uint64_t seed = 20240101;
  bool log_levels = false;         // estimate on log CIV instead of levels
  PosteriorMode mode = PosteriorMode::Point;

  void validate() const;
};

double resolve_bandwidth(const QbllConfig& cfg, Eigen::Index t);

struct KernelWeights {
  Eigen::VectorXd raw;         // (1/sqrt(2 pi)) exp(-0.5 ((k - t) / H)^2)
  Eigen::VectorXd normalized;  // rescaled to sum to the number of observations
  double effective_sum = 0.0;
};

// Weights for target index k over t = 0..T-1 (zero-based positions).
KernelWeights kernel_weights(Eigen::Index k, Eigen::Index t, double bandwidth);

// Same kernel evaluated at arbitrary observation positions; normalized weights sum to positions.size().
KernelWeights kernel_weights_at(Eigen::Index k, const Eigen::VectorXi& positions, double bandwidth);

struct NwPrior {
  Eigen::MatrixXd coef_mean;  // (1 + N p) x N
  Eigen::MatrixXd precision;  // (1 + N p) x (1 + N p)
  double dof = 0.0;
  Eigen::MatrixXd scale;      // N x N

  void validate() const;
};

// Prior precision of the intercept; effectively flat relative to any likelihood.
inline constexpr double kInterceptPrecision = 1e-6;

// Minnesota Normal-Wishart prior. residual_variances are the per-series AR(p)
// residual variances s_j^2. Lag l of series j gets precision l^2 s_j^2 / shrinkage^2,
// which makes the own-lag prior variance shrinkage^2 / l^2 and scales cross-lag
// terms by s_i^2 / s_j^2 through the Kronecker structure. dof = N + 2 and
// scale = diag(s_j^2) (Kadiyala-Karlsson defaults).
NwPrior minnesota_prior(int n, int lags, const QbllConfig& cfg, const Eigen::VectorXd& residual_variances);

// Zero-precision coefficient prior (posterior mean equals weighted least squares).
NwPrior diffuse_prior(int n, int lags);

// Per-series AR(p) residual variance with an intercept (OLS, divided by rows - p - 1).
Eigen::VectorXd ar_residual_variances(const Eigen::MatrixXd& y, int lags);

// Rows t = p..T-1 of the regression. positions[r] is the time index of row r.
struct VarDesign {
  Eigen::MatrixXd regressors;  // R x (1 + N p)
  Eigen::MatrixXd targets;     // R x N
  Eigen::VectorXi positions;
};

// Builds the design from a balanced T x N panel. Rows whose target or lags
// contain NaN are dropped.
VarDesign build_design(const Eigen::MatrixXd& panel, int lags);

struct PosteriorState {
  Eigen::Index index = 0;     // target position k
  Eigen::MatrixXd coef_mean;  // posterior mean of Phi
  Eigen::MatrixXd precision;  // Xi
  double dof = 0.0;           // alpha
  Eigen::MatrixXd scale;      // Gamma
  int lags = 0;

  int n() const { return static_cast<int>(coef_mean.cols()); }
  // Posterior mean of Sigma, scale / (dof - N - 1).
  Eigen::MatrixXd sigma_mean() const;
};

// Condition number of the weighted cross-product after unit-diagonal scaling.
// Throws SingularDesign above this threshold.
inline constexpr double kMaxDesignCondition = 1e12;

PosteriorState qbll_posterior(const VarDesign& design, Eigen::Index k, const NwPrior& prior,
                              const KernelWeights& weights, int lags);

// Reduced-form VAR parameters.
struct VarParams {
  Eigen::VectorXd intercept;
  std::vector<Eigen::MatrixXd> lag_coefs;  // Phi_1..Phi_p, each N x N with rows = equations
  Eigen::MatrixXd sigma;
};

VarParams to_var_params(const Eigen::MatrixXd& coef, const Eigen::MatrixXd& sigma, int lags);
double spectral_radius(const std::vector<Eigen::MatrixXd>& lag_coefs);

// Independent draws from the Normal-Wishart posterior; deterministic in seed.
std::vector<VarParams> sample_posterior(const PosteriorState& state, int n_draws, std::uint64_t seed);

// Time x currency CIV panel; NaN marks unavailable cells.
struct CivPanel {
  std::vector<Date> dates;
  std::vector<std::string> currencies;
  Eigen::MatrixXd values;
};

struct DateEstimate {
  Eigen::Index index = 0;
  Date date;
  std::vector<int> active;  // columns of the CivPanel in the system
  VarParams point;          // posterior means
  double spectral_radius = 0.0;
  std::vector<VarParams> draws;
  double bandwidth = 0.0;
  double dof = 0.0;
};

struct TvpVarPath {
  std::vector<std::string> currencies;
  QbllConfig config;
  std::vector<DateEstimate> estimates;
};

// Estimates the system at each requested position. A currency enters the system
// at k only if it is observed throughout [k - 3H, k + 3H] clipped to the sample.
// Throws std::out_of_range for bad positions and SingularDesign (with the date)
// when a local design is degenerate.
TvpVarPath estimate_path(const CivPanel& panel, const std::vector<Eigen::Index>& positions, const QbllConfig& cfg,
                         int threads = 1);

// 64-bit mixing used to derive per-task seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace fxnet
