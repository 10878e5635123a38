#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fxnet/market_data.hpp"

namespace fxnet {

// Log excess returns of holding each currency forward over one sampling period.
// Matrices are periods x currencies; NaN marks a currency absent at either end.
// rx is computed as ir + fx so the decomposition holds bit-for-bit.
struct ExcessReturnPanel {
  std::vector<Date> start;  // t: signal / portfolio formation date
  std::vector<Date> end;    // t+1: realization date
  std::vector<std::string> currencies;
  Eigen::MatrixXd rx, fx, ir;
  // log quotes used by the transaction-cost ledger
  Eigen::MatrixXd fwd_bid, fwd_mid, fwd_ask;  // at start
  Eigen::MatrixXd spot_start;                 // mid at start
  Eigen::MatrixXd spot_bid, spot_mid, spot_ask;  // at end

  Eigen::Index periods() const { return rx.rows(); }
  Eigen::Index n_currencies() const { return rx.cols(); }
};

ExcessReturnPanel excess_returns(const AlignedDataset& data, const std::vector<Date>& sample_dates);

// Which end of the sort the strategy buys. Network sorts buy P5 (lowest
// signal) and sell P1; the benchmark sorts buy P1 and sell P5.
enum class LongLeg { P5, P1 };

// Quintile label per currency: 1..5, 0 = outside the universe.
using Assignment = std::vector<int>;

// Sizes of P1..P5 for n currencies: floor(n/5) each. An odd remainder adds one
// to P3, then pairs go to (P1, P5) and (P2, P4), keeping the sizes symmetric.
std::array<int, 5> quintile_sizes(int n);

// Descending sort of finite signal values, ties broken by currency code; P1
// holds the highest values. Throws UniverseTooSmall for fewer than five.
Assignment sort_quintiles(const Eigen::VectorXd& signal, const std::vector<std::string>& codes);

struct StrategyTrack {
  std::string name;
  LongLeg orientation = LongLeg::P5;
  double cost_fraction = 0.0;   // share of the quoted half-spread paid; 0 = gross
  std::vector<Date> dates;      // realization dates
  Eigen::MatrixXd quintile;     // periods x 5
  Eigen::VectorXd long_short;
  Eigen::MatrixXd quintile_fx, quintile_ir;
  Eigen::VectorXd long_short_fx, long_short_ir;
  Eigen::VectorXd signal_mean;  // average signal per quintile
  std::vector<Assignment> assignments;
};

// Sorts every period on `signal` (periods x currencies, NaN = unavailable) and
// realizes returns over the same period. A currency is in the universe at t
// when its signal and its rx over (t, t+1] exist. Periods with fewer than five
// currencies have NaN returns and empty assignments.
StrategyTrack long_short_returns(const std::string& name, const Eigen::MatrixXd& signal, const ExcessReturnPanel& rx,
                                 LongLeg orientation);

// Re-prices a track's positions with bid/ask quotes. Longs earn f^b - s^a_{t+1}
// when closed at t+1 and f^b - s_{t+1} when held; shorts mirror with f^a and s^b.
// Effective quotes sit `cost_fraction` of the way from mid to the quoted side.
// Every position is closed at the last period. Throws MissingQuote.
StrategyTrack apply_transaction_costs(const StrategyTrack& gross, const ExcessReturnPanel& rx, double cost_fraction);

// Side of each currency per period: +1 long, -1 short, 0 flat.
std::vector<std::vector<int>> positions(const StrategyTrack& track);

// Per-period returns of a single-currency position sequence under the ledger rules.
Eigen::VectorXd position_ledger(const std::vector<int>& sides, const ExcessReturnPanel& rx, Eigen::Index currency,
                                double cost_fraction);

enum class Benchmark { Dollar, Carry, Volatility, VarianceRiskPremium, Momentum };
std::string_view to_string(Benchmark b);
Benchmark parse_benchmark(std::string_view s);
LongLeg benchmark_orientation(Benchmark b);

struct BenchmarkInputs {
  const AlignedDataset* data = nullptr;
  const ExcessReturnPanel* rx = nullptr;
  const Eigen::MatrixXd* civ = nullptr;  // dates x currencies of the aligned dataset, needed for VRP
  int momentum_lookback = 6;
};

// Signal matrix (periods x currencies) for a sort-based benchmark. Cells with
// insufficient history are NaN. Dollar is not a sort; use dollar_portfolio.
Eigen::MatrixXd benchmark_signals(Benchmark kind, const BenchmarkInputs& in);

// Signal of one period; throws InsufficientHistory when no currency qualifies.
Eigen::VectorXd benchmark_signal(Benchmark kind, const BenchmarkInputs& in, Eigen::Index period);

// Equal-weight average rx of all available currencies per period.
Eigen::VectorXd dollar_portfolio(const ExcessReturnPanel& rx);

// Square root of the sum of squared daily log spot changes over (t - 1 month, t].
// NaN when the currency lacks FX quotes covering that window.
double realized_volatility(const AlignedDataset& data, std::size_t currency, Date t);

struct SummaryStats {
  int n = 0;
  double mean = 0.0;     // annualized, percent
  double t_stat = 0.0;   // Newey-West with Andrews lag
  double sharpe = 0.0;   // annualized
  double std = 0.0;      // annualized, percent
  double skewness = 0.0;
  double kurtosis = 0.0; // raw
  double ac1 = 0.0;
  bool degenerate = false;  // zero variance: Sharpe and t undefined (NaN)
};

// NaN entries are dropped first. Throws TooShort below 24 observations.
SummaryStats performance_stats(const Eigen::VectorXd& returns, Frequency freq);

struct SpanningResult {
  double alpha = 0.0;  // annualized, decimal
  double alpha_t = 0.0;
  Eigen::VectorXd betas, beta_t;
  double r2 = 0.0, adj_r2 = 0.0;
  int lag = 0;
};

// y_t = alpha + factors_t' beta + e_t with HAC t-stats. Throws RankDeficient.
SpanningResult spanning_regression(const Eigen::VectorXd& y, const Eigen::MatrixXd& factors, Frequency freq);

// Weighted combination of aligned tracks (weights sum to one).
StrategyTrack combine_portfolios(const std::vector<const StrategyTrack*>& tracks, const std::vector<double>& weights);

struct AllocationRow {
  std::string currency;
  double buy_a = 0, sell_a = 0, buy_b = 0, sell_b = 0, diff = 0;
};
struct AllocationReport {
  std::vector<AllocationRow> rows;
  AllocationRow average;
};

// Frequencies are fractions of the overlapping periods in which the currency is
// in either universe. diff is the share of those periods where its side differs.
AllocationReport allocation_report(const StrategyTrack& a, const StrategyTrack& b,
                                   const std::vector<std::string>& currencies);

}  // namespace fxnet
