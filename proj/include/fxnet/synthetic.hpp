#pragma once

// Seeded synthetic market: a VAR(1) in implied-variance deviations with an
// optional planted pure transmitter, smiles around the simulated ATM vol, and
// spot/forward quotes with persistent interest-rate spreads (carry) and a
// common dollar factor. Writes loader-compatible CSVs plus a JSON sidecar
// with the generating truth.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fxnet/date.hpp"
#include "fxnet/market_data.hpp"

namespace fxnet {

struct SyntheticConfig {
  int n_currencies = 6;
  int n_days = 750;               // business days
  Date start = Date(2010, 1, 4);
  std::uint64_t seed = 7;
  bool transmitter = true;        // currency 0 drives the others, receives nothing
  bool zero_linkage = false;      // diagonal VAR and diagonal shock covariance
  double own_persistence = 0.7;
  double transmission = 0.45;     // loading of every other currency on currency 0's lag
  double shock_sd = 0.05;         // relative shock to variance deviations
  double shock_correlation = 0.3; // common component of variance shocks
  double carry_spread = 0.06;     // annual rate gap between highest and lowest yielder
  double rate_noise = 0.002;      // daily noise sd of each foreign rate, mean reverting
  double usd_rate = 0.02;
  double spread_bp = 10.0;        // full spot bid-ask spread in basis points; forwards use 1.5x
  double dollar_factor_share = 0.5;  // share of daily spot variance from the common factor
  bool staggered_entry = false;   // the last two currencies enter a quarter and half way in

  void validate() const;
};

struct SyntheticTruth {
  std::vector<std::string> currencies;
  std::string transmitter;              // empty when none is planted
  Eigen::MatrixXd var_coef;             // N x N, rows = equations
  Eigen::MatrixXd shock_cov;            // N x N
  Eigen::VectorXd mean_vol;             // long-run ATM vol per currency
  Eigen::VectorXd mean_rate;            // long-run foreign rate per currency
  std::vector<int> entry_day;           // first day index of each currency
  double carry_premium_monthly = 0.0;   // expected P1 - P5 carry return per month
};

struct SyntheticMarket {
  VolSurfacePanel surface;
  std::vector<FxRecord> fx;
  SyntheticTruth truth;
  Eigen::MatrixXd atm_vol;  // days x currencies, NaN before entry
};

std::vector<std::string> synthetic_codes(int n);

SyntheticMarket generate_synthetic(const SyntheticConfig& cfg);

// Writes options.csv, fx.csv and truth.json into dir (created if missing).
void write_synthetic(const SyntheticMarket& m, const std::string& dir);

// Sidecar JSON including the horizon-band adjacency implied by the true VAR.
std::string truth_json(const SyntheticTruth& truth);

}  // namespace fxnet
