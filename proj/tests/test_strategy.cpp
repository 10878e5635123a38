#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fxnet/error.hpp"
#include "fxnet/strategy.hpp"
#include "fxnet/synthetic.hpp"
#include "fixtures.hpp"

using namespace fxnet;
using namespace fxnet::testing;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

AlignedDataset::Cell fx_cell(double spot, double fwd) {
  AlignedDataset::Cell c;
  c.has_fx = c.has_smile = true;
  c.vols.fill(0.1);
  c.fx.spot_bid = c.fx.spot_mid = c.fx.spot_ask = spot;
  c.fx.fwd_bid = c.fx.fwd_mid = c.fx.fwd_ask = fwd;
  return c;
}

}  // namespace

TEST(ExcessReturns, HandComputedLogs) {
  const std::vector<Date> dates = {Date(2020, 1, 31), Date(2020, 2, 28)};
  const AlignedDataset data(dates, {"EUR"}, {fx_cell(1.00, 1.02), fx_cell(1.01, 1.0)}, kOneMonth);
  const ExcessReturnPanel rx = excess_returns(data, dates);
  ASSERT_EQ(rx.periods(), 1);
  EXPECT_NEAR(rx.ir(0, 0), std::log(1.02), 1e-15);
  EXPECT_NEAR(rx.fx(0, 0), -std::log(1.01), 1e-15);
  EXPECT_NEAR(rx.rx(0, 0), std::log(1.02) - std::log(1.01), 1e-15);
  EXPECT_NEAR(rx.rx(0, 0), 0.00985, 1e-5);
  EXPECT_EQ(rx.rx(0, 0), rx.ir(0, 0) + rx.fx(0, 0));
}

TEST(ExcessReturns, ForwardEqualsFutureSpotIsZero) {
  const std::vector<Date> dates = {Date(2020, 1, 31), Date(2020, 2, 28)};
  const AlignedDataset data(dates, {"EUR"}, {fx_cell(1.3, 1.25), fx_cell(1.25, 1.2)}, kOneMonth);
  EXPECT_EQ(excess_returns(data, dates).rx(0, 0), 0.0);
}

TEST(ExcessReturns, IdentityAndMissingEndpoints) {
  SyntheticConfig cfg;
  cfg.n_days = 300;
  cfg.staggered_entry = true;
  const SyntheticMarket m = generate_synthetic(cfg);
  const AlignedDataset data = align(m.surface, m.fx);
  const ExcessReturnPanel rx = excess_returns(data, sample_period_ends(data.dates(), Frequency::Monthly));
  int missing = 0;
  for (Eigen::Index p = 0; p < rx.periods(); ++p)
    for (Eigen::Index c = 0; c < rx.n_currencies(); ++c) {
      if (std::isnan(rx.rx(p, c))) {
        ++missing;
        continue;
      }
      EXPECT_EQ(rx.rx(p, c), rx.ir(p, c) + rx.fx(p, c));
    }
  EXPECT_GT(missing, 0);
}

TEST(QuintileSizes, TileAndSymmetric) {
  for (int n = 5; n <= 25; ++n) {
    const auto s = quintile_sizes(n);
    EXPECT_EQ(s[0] + s[1] + s[2] + s[3] + s[4], n);
    EXPECT_LE(*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()), 1);
    EXPECT_EQ(s[0], s[4]);
    EXPECT_EQ(s[1], s[3]);
    EXPECT_GE(s[0], s[1]);
  }
  EXPECT_EQ(quintile_sizes(10), (std::array<int, 5>{2, 2, 2, 2, 2}));
  EXPECT_EQ(quintile_sizes(13), (std::array<int, 5>{3, 2, 3, 2, 3}));
  EXPECT_EQ(quintile_sizes(7), (std::array<int, 5>{2, 1, 1, 1, 2}));
  EXPECT_EQ(quintile_sizes(9), (std::array<int, 5>{2, 2, 1, 2, 2}));
}

TEST(SortQuintiles, DescendingWithCodeTieBreak) {
  Eigen::VectorXd s(6);
  s << 0.3, 0.3, 0.3, 0.3, 0.3, 0.3;
  const Assignment a = sort_quintiles(s, {"FFF", "EEE", "DDD", "CCC", "BBB", "AAA"});
  // sizes (1,1,2,1,1): AAA, BBB, {CCC, DDD}, EEE, FFF
  EXPECT_EQ(a, (Assignment{5, 4, 3, 3, 2, 1}));
  Eigen::VectorXd v(5);
  v << 1.0, 5.0, 2.0, kNaN, 3.0;
  EXPECT_THROW(sort_quintiles(v, codes(5)), UniverseTooSmall);
  v[3] = 4.0;
  EXPECT_EQ(sort_quintiles(v, codes(5)), (Assignment{5, 1, 4, 2, 3}));
}

TEST(LongShort, SingleCurrencyPerQuintile) {
  const ExcessReturnPanel rx = iid_panel(3, 5, 1);
  Eigen::MatrixXd sig(3, 5);
  sig.rowwise() = Eigen::RowVectorXd::LinSpaced(5, 5.0, 1.0);
  const StrategyTrack t = long_short_returns("x", sig, rx, LongLeg::P5);
  for (Eigen::Index p = 0; p < 3; ++p) {
    for (int q = 0; q < 5; ++q) EXPECT_EQ(t.quintile(p, q), rx.rx(p, q));
    EXPECT_EQ(t.long_short[p], rx.rx(p, 4) - rx.rx(p, 0));
    EXPECT_EQ(t.long_short_fx[p], rx.fx(p, 4) - rx.fx(p, 0));
  }
}

TEST(LongShort, NegatedSignalIsAntisymmetric) {
  const ExcessReturnPanel rx = iid_panel(60, 10, 2);
  const Eigen::MatrixXd sig = random_signal(60, 10, 3);
  const StrategyTrack a = long_short_returns("a", sig, rx, LongLeg::P5);
  const StrategyTrack b = long_short_returns("b", -sig, rx, LongLeg::P5);
  EXPECT_TRUE(b.long_short == -a.long_short);
  for (int q = 0; q < 5; ++q) EXPECT_TRUE(b.quintile.col(q) == a.quintile.col(4 - q));
  // sizes 13 are symmetric too
  const ExcessReturnPanel r13 = iid_panel(20, 13, 4);
  const Eigen::MatrixXd s13 = random_signal(20, 13, 5);
  EXPECT_TRUE(long_short_returns("c", -s13, r13, LongLeg::P5).long_short == -long_short_returns("d", s13, r13, LongLeg::P5).long_short);
}

TEST(LongShort, OrientationFlipsSign) {
  const ExcessReturnPanel rx = iid_panel(30, 7, 6);
  const Eigen::MatrixXd sig = random_signal(30, 7, 7);
  EXPECT_TRUE(long_short_returns("a", sig, rx, LongLeg::P1).long_short == -long_short_returns("b", sig, rx, LongLeg::P5).long_short);
}

TEST(LongShort, SmallUniverseGivesNaN) {
  ExcessReturnPanel rx = iid_panel(2, 6, 8);
  rx.rx(1, 0) = rx.rx(1, 1) = kNaN;
  const StrategyTrack t = long_short_returns("x", random_signal(2, 6, 9), rx, LongLeg::P5);
  EXPECT_TRUE(std::isfinite(t.long_short[0]));
  EXPECT_TRUE(std::isnan(t.long_short[1]));
  EXPECT_EQ(t.assignments[1], Assignment(6, 0));
}

TEST(LongShort, NoLookAhead) {
  ExcessReturnPanel rx = iid_panel(40, 10, 10);
  BenchmarkInputs in;
  in.rx = &rx;
  AlignedDataset dummy({Date(2000, 1, 3)}, {"X"}, {fx_cell(1.0, 1.0)}, kOneMonth);
  in.data = &dummy;
  const Eigen::MatrixXd mom = benchmark_signals(Benchmark::Momentum, in);
  const StrategyTrack a = long_short_returns("mom", mom, rx, LongLeg::P1);
  // scramble every return realized after period 20
  std::mt19937_64 rng(11);
  for (Eigen::Index p = 21; p < rx.periods(); ++p) {
    Eigen::RowVectorXd row = rx.rx.row(p);
    std::shuffle(row.data(), row.data() + row.size(), rng);
    rx.rx.row(p) = row;
  }
  const Eigen::MatrixXd mom2 = benchmark_signals(Benchmark::Momentum, in);
  for (Eigen::Index p = 0; p <= 21; ++p)
    for (Eigen::Index c = 0; c < 10; ++c)
      EXPECT_TRUE(mom(p, c) == mom2(p, c) || (std::isnan(mom(p, c)) && std::isnan(mom2(p, c))));
  const StrategyTrack b = long_short_returns("mom", mom2, rx, LongLeg::P1);
  for (std::size_t p = 0; p <= 20; ++p) EXPECT_EQ(a.assignments[p], b.assignments[p]) << p;
}

TEST(LongShort, RandomSignalPlacebo) {
  int rejections = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const ExcessReturnPanel rx = iid_panel(240, 10, seed);
    const StrategyTrack t = long_short_returns("r", random_signal(240, 10, 1000 + seed), rx, LongLeg::P5);
    rejections += std::abs(performance_stats(t.long_short, Frequency::Monthly).t_stat) >= 3.0;
  }
  EXPECT_EQ(rejections, 0);
}

TEST(TransactionCosts, ZeroSpreadIsBitIdentical) {
  const ExcessReturnPanel rx = iid_panel(30, 8, 12);
  const StrategyTrack g = long_short_returns("x", random_signal(30, 8, 13), rx, LongLeg::P5);
  const StrategyTrack n = apply_transaction_costs(g, rx, 0.5);
  EXPECT_TRUE(n.long_short == g.long_short);
  EXPECT_TRUE(n.quintile == g.quintile);
}

TEST(TransactionCosts, SingleRoundTripCostsHalfSpread) {
  const double spread = 0.0010;
  const ExcessReturnPanel rx = iid_panel(3, 1, 14, spread);
  const Eigen::VectorXd gross = position_ledger({1, 0, 0}, rx, 0, 0.0);
  const Eigen::VectorXd net = position_ledger({1, 0, 0}, rx, 0, 0.5);
  EXPECT_NEAR(gross[0] - net[0], 0.0005, 1e-15);
  EXPECT_EQ(gross[0], rx.rx(0, 0));
  EXPECT_TRUE(std::isnan(net[1]));
  const Eigen::VectorXd full = position_ledger({-1, 0, 0}, rx, 0, 1.0);
  EXPECT_NEAR(-rx.rx(0, 0) - full[0], 0.0010, 1e-15);
}

TEST(TransactionCosts, HoldingIsCheaperThanRolling) {
  const ExcessReturnPanel rx = iid_panel(2, 1, 15, 0.002);
  for (int side : {1, -1}) {
    const double held = position_ledger({side, side}, rx, 0, 0.5).sum();
    const double rolled = position_ledger({side, 0}, rx, 0, 0.5)[0] + position_ledger({0, side}, rx, 0, 0.5)[1];
    EXPECT_GT(held, rolled);
    // holding skips one spot exit: three quarter-spreads instead of four
    EXPECT_NEAR(side * rx.rx.col(0).sum() - held, 0.0015, 1e-14);
    EXPECT_NEAR(side * rx.rx.col(0).sum() - rolled, 0.0020, 1e-14);
  }
}

TEST(TransactionCosts, NetBelowGrossAndMissingQuote) {
  ExcessReturnPanel rx = iid_panel(24, 10, 16, 0.001);
  const StrategyTrack g = long_short_returns("x", random_signal(24, 10, 17), rx, LongLeg::P5);
  const StrategyTrack n = apply_transaction_costs(g, rx, 0.5);
  for (Eigen::Index p = 0; p < 24; ++p) EXPECT_LT(n.long_short[p], g.long_short[p]);
  // every sorted currency is priced, so one missing quote is enough
  rx.spot_ask(3, 0) = kNaN;
  EXPECT_THROW(apply_transaction_costs(g, rx, 0.5), MissingQuote);
}

TEST(Benchmarks, DollarAverage) {
  ExcessReturnPanel rx = iid_panel(4, 3, 18);
  rx.rx(1, 1) = rx.rx(1, 2) = kNaN;
  const Eigen::VectorXd d = dollar_portfolio(rx);
  EXPECT_DOUBLE_EQ(d[0], rx.rx.row(0).mean());
  EXPECT_EQ(d[1], rx.rx(1, 0));
}

TEST(Benchmarks, ZeroDifferentialCarryIsAlphabetical) {
  const std::vector<Date> dates = {Date(2020, 1, 31), Date(2020, 2, 28)};
  std::vector<AlignedDataset::Cell> cells;
  for (int t = 0; t < 2; ++t)
    for (int c = 0; c < 5; ++c) cells.push_back(fx_cell(1.0 + 0.1 * c, 1.0 + 0.1 * c));
  const AlignedDataset data(dates, {"E", "D", "C", "B", "A"}, cells, kOneMonth);
  const ExcessReturnPanel rx = excess_returns(data, dates);
  BenchmarkInputs in{&data, &rx, nullptr, 6};
  const Eigen::MatrixXd car = benchmark_signals(Benchmark::Carry, in);
  EXPECT_EQ(car.cwiseAbs().maxCoeff(), 0.0);
  const StrategyTrack t = long_short_returns("car", car, rx, LongLeg::P1);
  EXPECT_EQ(t.assignments[0], (Assignment{5, 4, 3, 2, 1}));
  EXPECT_THROW(benchmark_signal(Benchmark::Momentum, in, 0), InsufficientHistory);
  EXPECT_THROW(benchmark_signals(Benchmark::VarianceRiskPremium, in), std::invalid_argument);
}

TEST(Benchmarks, PlantedCarryPremium) {
  SyntheticConfig cfg;
  cfg.n_currencies = 10;
  cfg.n_days = 252 * 20;
  cfg.transmitter = false;
  cfg.seed = 21;
  const SyntheticMarket m = generate_synthetic(cfg);
  const AlignedDataset data = align(m.surface, m.fx);
  const ExcessReturnPanel rx = excess_returns(data, sample_period_ends(data.dates(), Frequency::Monthly));
  BenchmarkInputs in{&data, &rx, nullptr, 6};
  const StrategyTrack t = long_short_returns("car", benchmark_signals(Benchmark::Carry, in), rx, LongLeg::P1);
  const SummaryStats s = performance_stats(t.long_short, Frequency::Monthly);
  const double mean = s.mean / 1200.0, se = mean / s.t_stat;
  EXPECT_GT(mean, 0.0);
  EXPECT_NEAR(mean, m.truth.carry_premium_monthly, 3.0 * se);
}

TEST(PerformanceStats, ConstantIsDegenerate) {
  const SummaryStats s = performance_stats(Eigen::VectorXd::Constant(30, 0.01), Frequency::Monthly);
  EXPECT_TRUE(s.degenerate);
  EXPECT_TRUE(std::isnan(s.sharpe));
  EXPECT_NEAR(s.mean, 12.0, 1e-12);
  EXPECT_THROW(performance_stats(Eigen::VectorXd::Constant(23, 0.01), Frequency::Monthly), TooShort);
}

TEST(PerformanceStats, GaussianMonthly) {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> z(0.005, 0.02);
  Eigen::VectorXd x(10'000);
  for (auto& v : x) v = z(rng);
  const SummaryStats s = performance_stats(x, Frequency::Monthly);
  // the annualized mean has sd 100 * 0.02 * 12 / 100 = 0.24 percent
  EXPECT_NEAR(s.mean, 6.0, 0.72);
  EXPECT_NEAR(s.sharpe, 0.005 * 12 / (0.02 * std::sqrt(12.0)), 0.04);
  EXPECT_NEAR(s.std, 100 * 0.02 * std::sqrt(12.0), 0.1);
  EXPECT_NEAR(s.kurtosis, 3.0, 0.15);
  EXPECT_NEAR(s.skewness, 0.0, 0.08);
  EXPECT_NEAR(s.sharpe, s.mean / s.std, 1e-12);
}

TEST(Spanning, SelfRegressionAndPlantedBeta) {
  std::mt19937_64 rng(20);
  std::normal_distribution<double> z(0.0, 0.02);
  Eigen::VectorXd f(240), y(240);
  for (int i = 0; i < 240; ++i) f[i] = 0.002 + z(rng);
  const SpanningResult self = spanning_regression(f, Eigen::MatrixXd(f), Frequency::Monthly);
  EXPECT_NEAR(self.alpha, 0.0, 1e-14);
  EXPECT_NEAR(self.betas[0], 1.0, 1e-12);
  EXPECT_NEAR(self.r2, 1.0, 1e-12);
  for (int i = 0; i < 240; ++i) y[i] = 2.0 * f[i] + 0.5 * z(rng);
  EXPECT_NEAR(spanning_regression(y, Eigen::MatrixXd(f), Frequency::Monthly).betas[0], 2.0, 0.1);
  Eigen::MatrixXd two(240, 2);
  two << f, f;
  EXPECT_THROW(spanning_regression(y, two, Frequency::Monthly), RankDeficient);
}

TEST(Spanning, OrthogonalPlacebo) {
  int rejections = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::VectorXd y(240);
    Eigen::MatrixXd f(240, 3);
    for (auto& v : y) v = z(rng);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = z(rng);
    const SpanningResult r = spanning_regression(y, f, Frequency::Monthly);
    rejections += (r.beta_t.cwiseAbs().array() >= 3.0).any();
  }
  EXPECT_LE(rejections, 1);
}

TEST(Combine, WeightsAndCancellation) {
  const ExcessReturnPanel rx = iid_panel(40, 10, 22);
  const StrategyTrack a = long_short_returns("a", random_signal(40, 10, 23), rx, LongLeg::P5);
  const StrategyTrack b = long_short_returns("b", random_signal(40, 10, 24), rx, LongLeg::P5);
  EXPECT_TRUE(combine_portfolios({&a, &b}, {1.0, 0.0}).long_short == a.long_short);
  StrategyTrack neg = a;
  neg.long_short = -a.long_short;
  EXPECT_EQ(combine_portfolios({&a, &neg}, {0.5, 0.5}).long_short.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(combine_portfolios({&a, &b}, {0.6, 0.6}), std::invalid_argument);
  const StrategyTrack c = long_short_returns("c", random_signal(30, 10, 25), iid_panel(30, 10, 26), LongLeg::P5);
  EXPECT_THROW(combine_portfolios({&a, &c}, {0.5, 0.5}), LengthMismatch);
}

TEST(Combine, HalvesVarianceOfIndependentSeries) {
  StrategyTrack a, b;
  std::mt19937_64 rng(27);
  std::normal_distribution<double> z;
  a.long_short.resize(50'000);
  b.long_short.resize(50'000);
  for (auto& v : a.long_short) v = z(rng);
  for (auto& v : b.long_short) v = z(rng);
  a.quintile = b.quintile = Eigen::MatrixXd::Zero(50'000, 5);
  const Eigen::VectorXd c = combine_portfolios({&a, &b}, {0.5, 0.5}).long_short;
  const double var_c = (c.array() - c.mean()).square().mean();
  EXPECT_NEAR(var_c, 0.5, 0.02);
}

TEST(Allocation, HandCountedFrequencies) {
  StrategyTrack a, b;
  a.orientation = b.orientation = LongLeg::P5;
  // 5 currencies, 4 periods; a is fixed, b swaps the extremes in the last two periods
  a.assignments.assign(4, Assignment{1, 2, 3, 4, 5});
  b.assignments = a.assignments;
  b.assignments[2] = b.assignments[3] = Assignment{5, 2, 3, 4, 1};
  const AllocationReport same = allocation_report(a, a, codes(5));
  for (const auto& r : same.rows) EXPECT_EQ(r.diff, 0.0);
  const AllocationReport rep = allocation_report(a, b, codes(5));
  EXPECT_EQ(rep.rows[0].sell_a, 1.0);
  EXPECT_EQ(rep.rows[0].buy_b, 0.5);
  EXPECT_EQ(rep.rows[0].sell_b, 0.5);
  EXPECT_EQ(rep.rows[0].diff, 0.5);
  EXPECT_EQ(rep.rows[2].diff, 0.0);
  EXPECT_EQ(rep.rows[4].buy_a, 1.0);
  EXPECT_DOUBLE_EQ(rep.average.diff, 0.2);
  b.assignments.assign(4, Assignment{5, 2, 3, 4, 1});
  const AllocationReport flip = allocation_report(a, b, codes(5));
  EXPECT_EQ(flip.rows[0].diff, 1.0);
  EXPECT_EQ(flip.rows[4].diff, 1.0);
}
