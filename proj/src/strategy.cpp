#include "fxnet/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fxnet/econometrics.hpp"
#include "fxnet/error.hpp"

namespace fxnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int long_label(LongLeg o) { return o == LongLeg::P5 ? 5 : 1; }
int short_label(LongLeg o) { return o == LongLeg::P5 ? 1 : 5; }

int side_of(int label, LongLeg o) {
  if (label == long_label(o)) return 1;
  if (label == short_label(o)) return -1;
  return 0;
}

Eigen::VectorXd finite_only(const Eigen::VectorXd& x) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(x.size()));
  for (double d : x)
    if (std::isfinite(d)) v.push_back(d);
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ExcessReturnPanel excess_returns(const AlignedDataset& data, const std::vector<Date>& sample_dates) {
  ExcessReturnPanel out;
  out.currencies = data.currencies();
  const Eigen::Index nc = static_cast<Eigen::Index>(data.n_currencies());
  const Eigen::Index np = sample_dates.size() >= 2 ? static_cast<Eigen::Index>(sample_dates.size() - 1) : 0;
  for (Eigen::MatrixXd* m : {&out.rx, &out.fx, &out.ir, &out.fwd_bid, &out.fwd_mid, &out.fwd_ask, &out.spot_start,
                             &out.spot_bid, &out.spot_mid, &out.spot_ask}) {
    m->setConstant(np, nc, kNaN);
  }
  for (Eigen::Index p = 0; p < np; ++p) {
    const auto t0 = data.date_index(sample_dates[static_cast<std::size_t>(p)]);
    const auto t1 = data.date_index(sample_dates[static_cast<std::size_t>(p + 1)]);
    if (!t0 || !t1 || *t1 <= *t0) throw std::invalid_argument("excess_returns: sample dates must be increasing grid dates");
    out.start.push_back(sample_dates[static_cast<std::size_t>(p)]);
    out.end.push_back(sample_dates[static_cast<std::size_t>(p + 1)]);
    for (Eigen::Index c = 0; c < nc; ++c) {
      const auto& a = data.cell(*t0, static_cast<std::size_t>(c));
      const auto& b = data.cell(*t1, static_cast<std::size_t>(c));
      if (!a.has_fx || !b.has_fx) continue;
      const double f = std::log(a.fx.fwd_mid), s0 = std::log(a.fx.spot_mid), s1 = std::log(b.fx.spot_mid);
      out.ir(p, c) = f - s0;
      out.fx(p, c) = s0 - s1;
      out.rx(p, c) = out.ir(p, c) + out.fx(p, c);
      out.fwd_bid(p, c) = std::log(a.fx.fwd_bid);
      out.fwd_mid(p, c) = f;
      out.fwd_ask(p, c) = std::log(a.fx.fwd_ask);
      out.spot_start(p, c) = s0;
      out.spot_bid(p, c) = std::log(b.fx.spot_bid);
      out.spot_mid(p, c) = s1;
      out.spot_ask(p, c) = std::log(b.fx.spot_ask);
    }
  }
  return out;
}

std::array<int, 5> quintile_sizes(int n) {
  std::array<int, 5> sizes;
  sizes.fill(n / 5);
  int r = n % 5;
  // symmetric about P3 so that negating a signal mirrors the sort exactly
  if (r % 2 == 1) {
    ++sizes[2];
    --r;
  }
  if (r >= 2) {
    ++sizes[0];
    ++sizes[4];
  }
  if (r >= 4) {
    ++sizes[1];
    ++sizes[3];
  }
  return sizes;
}

Assignment sort_quintiles(const Eigen::VectorXd& signal, const std::vector<std::string>& codes) {
  if (static_cast<std::size_t>(signal.size()) != codes.size()) throw std::invalid_argument("sort_quintiles: size mismatch");
  std::vector<int> idx;
  for (Eigen::Index i = 0; i < signal.size(); ++i)
    if (std::isfinite(signal[i])) idx.push_back(static_cast<int>(i));
  if (idx.size() < 5) throw UniverseTooSmall("need at least 5 currencies to form quintiles, have " + std::to_string(idx.size()));
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (signal[a] != signal[b]) return signal[a] > signal[b];
    return codes[static_cast<std::size_t>(a)] < codes[static_cast<std::size_t>(b)];
  });
  Assignment out(codes.size(), 0);
  const auto sizes = quintile_sizes(static_cast<int>(idx.size()));
  std::size_t pos = 0;
  for (int q = 0; q < 5; ++q)
    for (int i = 0; i < sizes[static_cast<std::size_t>(q)]; ++i) out[static_cast<std::size_t>(idx[pos++])] = q + 1;
  return out;
}

StrategyTrack long_short_returns(const std::string& name, const Eigen::MatrixXd& signal, const ExcessReturnPanel& rx,
                                 LongLeg orientation) {
  if (signal.rows() != rx.periods() || signal.cols() != rx.n_currencies()) {
    throw std::invalid_argument("long_short_returns: signal and return panels differ in shape");
  }
  const Eigen::Index np = rx.periods(), nc = rx.n_currencies();
  StrategyTrack tr;
  tr.name = name;
  tr.orientation = orientation;
  tr.dates = rx.end;
  tr.quintile.setConstant(np, 5, kNaN);
  tr.quintile_fx.setConstant(np, 5, kNaN);
  tr.quintile_ir.setConstant(np, 5, kNaN);
  tr.long_short.setConstant(np, kNaN);
  tr.long_short_fx.setConstant(np, kNaN);
  tr.long_short_ir.setConstant(np, kNaN);
  tr.signal_mean = Eigen::VectorXd::Zero(5);
  tr.assignments.assign(static_cast<std::size_t>(np), Assignment(static_cast<std::size_t>(nc), 0));
  int valid = 0;
  for (Eigen::Index p = 0; p < np; ++p) {
    Eigen::VectorXd s = signal.row(p).transpose();
    for (Eigen::Index c = 0; c < nc; ++c)
      if (!std::isfinite(rx.rx(p, c))) s[c] = kNaN;
    if ((s.array().isFinite()).count() < 5) continue;
    Assignment a = sort_quintiles(s, rx.currencies);
    Eigen::Vector<double, 5> sum_rx = Eigen::Vector<double, 5>::Zero(), sum_fx = sum_rx, sum_ir = sum_rx, sum_sig = sum_rx;
    Eigen::Vector<int, 5> count = Eigen::Vector<int, 5>::Zero();
    for (Eigen::Index c = 0; c < nc; ++c) {
      const int q = a[static_cast<std::size_t>(c)];
      if (q == 0) continue;
      sum_rx[q - 1] += rx.rx(p, c);
      sum_fx[q - 1] += rx.fx(p, c);
      sum_ir[q - 1] += rx.ir(p, c);
      sum_sig[q - 1] += s[c];
      ++count[q - 1];
    }
    for (int q = 0; q < 5; ++q) {
      tr.quintile(p, q) = sum_rx[q] / count[q];
      tr.quintile_fx(p, q) = sum_fx[q] / count[q];
      tr.quintile_ir(p, q) = sum_ir[q] / count[q];
      tr.signal_mean[q] += sum_sig[q] / count[q];
    }
    const int lq = long_label(orientation) - 1, sq = short_label(orientation) - 1;
    tr.long_short[p] = tr.quintile(p, lq) - tr.quintile(p, sq);
    tr.long_short_fx[p] = tr.quintile_fx(p, lq) - tr.quintile_fx(p, sq);
    tr.long_short_ir[p] = tr.quintile_ir(p, lq) - tr.quintile_ir(p, sq);
    tr.assignments[static_cast<std::size_t>(p)] = std::move(a);
    ++valid;
  }
  if (valid > 0) tr.signal_mean /= valid;
  return tr;
}

std::vector<std::vector<int>> positions(const StrategyTrack& track) {
  std::vector<std::vector<int>> out;
  out.reserve(track.assignments.size());
  for (const Assignment& a : track.assignments) {
    std::vector<int> sides(a.size());
    for (std::size_t c = 0; c < a.size(); ++c) sides[c] = side_of(a[c], track.orientation);
    out.push_back(std::move(sides));
  }
  return out;
}

namespace {

// Return of one position before its sign is applied: (f - s_t) + (s_t - s_exit)
// with f and s_exit taken on the side the trade pays. For shorts the caller negates.
double unsigned_leg(int side, bool held, const ExcessReturnPanel& rx, Eigen::Index p, Eigen::Index c, double cost) {
  const double s0 = rx.spot_start(p, c);
  const double fm = rx.fwd_mid(p, c), sm = rx.spot_mid(p, c);
  const double fq = side > 0 ? rx.fwd_bid(p, c) : rx.fwd_ask(p, c);
  const double sq = side > 0 ? rx.spot_ask(p, c) : rx.spot_bid(p, c);
  if (!std::isfinite(fq) || !std::isfinite(sq) || !std::isfinite(fm) || !std::isfinite(sm)) {
    throw MissingQuote("missing bid/ask for " + rx.currencies[static_cast<std::size_t>(c)] + " in period ending " +
                       rx.end[static_cast<std::size_t>(p)].str());
  }
  const double f_eff = fm - cost * (fm - fq);
  const double s_exit = held ? sm : sm - cost * (sm - sq);
  return (f_eff - s0) + (s0 - s_exit);
}

}  // namespace

Eigen::VectorXd position_ledger(const std::vector<int>& sides, const ExcessReturnPanel& rx, Eigen::Index currency,
                                double cost_fraction) {
  const Eigen::Index np = static_cast<Eigen::Index>(sides.size());
  Eigen::VectorXd out = Eigen::VectorXd::Constant(np, kNaN);
  for (Eigen::Index p = 0; p < np; ++p) {
    const int side = sides[static_cast<std::size_t>(p)];
    if (side == 0) continue;
    const bool held = p + 1 < np && sides[static_cast<std::size_t>(p + 1)] == side;
    const double u = unsigned_leg(side, held, rx, p, currency, cost_fraction);
    out[p] = side > 0 ? u : -u;
  }
  return out;
}

StrategyTrack apply_transaction_costs(const StrategyTrack& gross, const ExcessReturnPanel& rx, double cost_fraction) {
  if (!(cost_fraction >= 0.0)) throw std::invalid_argument("apply_transaction_costs: cost fraction must be >= 0");
  StrategyTrack tr = gross;
  tr.cost_fraction = cost_fraction;
  tr.name = gross.name;
  const Eigen::Index np = rx.periods(), nc = rx.n_currencies();
  const auto& as = gross.assignments;
  auto label = [&](Eigen::Index p, Eigen::Index c) {
    return p < np ? as[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)] : 0;
  };
  const int lq = long_label(gross.orientation), sq = short_label(gross.orientation);
  for (Eigen::Index p = 0; p < np; ++p) {
    if (!std::isfinite(gross.long_short[p])) continue;
    Eigen::Vector<double, 5> q_sum = Eigen::Vector<double, 5>::Zero();
    Eigen::Vector<int, 5> q_n = Eigen::Vector<int, 5>::Zero();
    double short_sum = 0.0;
    int short_n = 0;
    for (Eigen::Index c = 0; c < nc; ++c) {
      const int q = label(p, c);
      if (q == 0) continue;
      const bool same_next = label(p + 1, c) == q;
      // every quintile is held long; the short leg of the spread is held short
      q_sum[q - 1] += unsigned_leg(+1, same_next, rx, p, c, cost_fraction);
      ++q_n[q - 1];
      if (q == sq) {
        short_sum += unsigned_leg(-1, same_next, rx, p, c, cost_fraction);
        ++short_n;
      }
    }
    for (int q = 0; q < 5; ++q) tr.quintile(p, q) = q_sum[q] / q_n[q];
    tr.long_short[p] = tr.quintile(p, lq - 1) - short_sum / short_n;
  }
  return tr;
}

std::string_view to_string(Benchmark b) {
  switch (b) {
    case Benchmark::Dollar: return "dol";
    case Benchmark::Carry: return "car";
    case Benchmark::Volatility: return "vol";
    case Benchmark::VarianceRiskPremium: return "vrp";
    case Benchmark::Momentum: return "mom";
  }
  return "?";
}

Benchmark parse_benchmark(std::string_view s) {
  for (Benchmark b : {Benchmark::Dollar, Benchmark::Carry, Benchmark::Volatility, Benchmark::VarianceRiskPremium,
                      Benchmark::Momentum}) {
    if (s == to_string(b)) return b;
  }
  throw ConfigError("unknown benchmark '" + std::string(s) + "'");
}

LongLeg benchmark_orientation(Benchmark) { return LongLeg::P1; }

double realized_volatility(const AlignedDataset& data, std::size_t currency, Date t) {
  const auto ti = data.date_index(t);
  if (!ti || !data.cell(*ti, currency).has_fx) return kNaN;
  const Date window_start = t.minus_one_month();
  const auto& dates = data.dates();
  const auto first_in = static_cast<std::size_t>(std::upper_bound(dates.begin(), dates.end(), window_start) - dates.begin());
  if (first_in == 0 || !data.cell(first_in - 1, currency).has_fx) return kNaN;
  double prev = std::log(data.cell(first_in - 1, currency).fx.spot_mid);
  double ss = 0.0;
  for (std::size_t i = first_in; i <= *ti; ++i) {
    const auto& cell = data.cell(i, currency);
    if (!cell.has_fx) continue;
    const double s = std::log(cell.fx.spot_mid);
    ss += (s - prev) * (s - prev);
    prev = s;
  }
  return std::sqrt(ss);
}

Eigen::MatrixXd benchmark_signals(Benchmark kind, const BenchmarkInputs& in) {
  if (!in.rx || !in.data) throw std::invalid_argument("benchmark_signals: missing inputs");
  const ExcessReturnPanel& rx = *in.rx;
  const AlignedDataset& data = *in.data;
  const Eigen::Index np = rx.periods(), nc = rx.n_currencies();
  Eigen::MatrixXd sig = Eigen::MatrixXd::Constant(np, nc, kNaN);
  switch (kind) {
    case Benchmark::Dollar:
      throw std::invalid_argument("dollar is a portfolio, not a sort; use dollar_portfolio");
    case Benchmark::Carry:
      for (Eigen::Index p = 0; p < np; ++p) {
        const auto t = *data.date_index(rx.start[static_cast<std::size_t>(p)]);
        for (Eigen::Index c = 0; c < nc; ++c) {
          const auto& cell = data.cell(t, static_cast<std::size_t>(c));
          if (cell.has_fx) sig(p, c) = std::log(cell.fx.fwd_mid) - std::log(cell.fx.spot_mid);
        }
      }
      break;
    case Benchmark::Volatility:
    case Benchmark::VarianceRiskPremium:
      if (kind == Benchmark::VarianceRiskPremium && !in.civ) throw std::invalid_argument("vrp needs the CIV panel");
      for (Eigen::Index p = 0; p < np; ++p) {
        const Date t = rx.start[static_cast<std::size_t>(p)];
        const auto ti = *data.date_index(t);
        for (Eigen::Index c = 0; c < nc; ++c) {
          const double rv = realized_volatility(data, static_cast<std::size_t>(c), t);
          if (kind == Benchmark::Volatility) {
            sig(p, c) = rv;
          } else {
            const double civ = (*in.civ)(static_cast<Eigen::Index>(ti), c);
            sig(p, c) = rv - std::sqrt(civ);  // NaN propagates when either is missing
          }
        }
      }
      break;
    case Benchmark::Momentum: {
      const int l = in.momentum_lookback;
      if (l < 1) throw ConfigError("momentum lookback must be >= 1");
      for (Eigen::Index p = l; p < np; ++p) {
        for (Eigen::Index c = 0; c < nc; ++c) {
          const auto window = rx.rx.col(c).segment(p - l, l);
          if (window.allFinite()) sig(p, c) = window.mean();
        }
      }
      break;
    }
  }
  return sig;
}

Eigen::VectorXd benchmark_signal(Benchmark kind, const BenchmarkInputs& in, Eigen::Index period) {
  const Eigen::MatrixXd all = benchmark_signals(kind, in);
  if (period < 0 || period >= all.rows()) throw std::out_of_range("benchmark_signal: period outside the panel");
  Eigen::VectorXd row = all.row(period).transpose();
  if (!(row.array().isFinite()).any()) {
    throw InsufficientHistory(std::string(to_string(kind)) + ": no currency has enough history at period " +
                              std::to_string(period));
  }
  return row;
}

Eigen::VectorXd dollar_portfolio(const ExcessReturnPanel& rx) {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(rx.periods(), kNaN);
  for (Eigen::Index p = 0; p < rx.periods(); ++p) {
    double sum = 0.0;
    int n = 0;
    for (Eigen::Index c = 0; c < rx.n_currencies(); ++c) {
      if (std::isfinite(rx.rx(p, c))) {
        sum += rx.rx(p, c);
        ++n;
      }
    }
    if (n > 0) out[p] = sum / n;
  }
  return out;
}

SummaryStats performance_stats(const Eigen::VectorXd& returns, Frequency freq) {
  const Eigen::VectorXd x = finite_only(returns);
  if (x.size() < 24) throw TooShort("performance_stats: need at least 24 observations, have " + std::to_string(x.size()));
  const double a = periods_per_year(freq);
  const Moments m = describe(x);
  SummaryStats s;
  s.n = static_cast<int>(x.size());
  s.mean = 100.0 * m.mean * a;
  s.std = 100.0 * m.std * std::sqrt(a);
  s.skewness = m.skewness;
  s.kurtosis = m.kurtosis;
  s.ac1 = m.ac1;
  if (x.maxCoeff() == x.minCoeff()) {
    s.degenerate = true;
    s.sharpe = kNaN;
    s.t_stat = kNaN;
    return s;
  }
  s.sharpe = (m.mean * a) / (m.std * std::sqrt(a));
  const Eigen::MatrixXd d = Eigen::MatrixXd(x.array() - m.mean);
  const double lrv = nw_hac(d).long_run_cov(0, 0);
  s.t_stat = m.mean / std::sqrt(lrv / static_cast<double>(x.size()));
  return s;
}

SpanningResult spanning_regression(const Eigen::VectorXd& y, const Eigen::MatrixXd& factors, Frequency freq) {
  if (factors.rows() != y.size()) throw LengthMismatch("spanning_regression: y and factors differ in length");
  Eigen::MatrixXd x(y.size(), factors.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(factors.cols()) = factors;
  const OlsResult r = ols_hac(y, x);
  SpanningResult out;
  out.alpha = r.coef[0] * periods_per_year(freq);
  out.alpha_t = r.t_hac[0];
  out.betas = r.coef.tail(factors.cols());
  out.beta_t = r.t_hac.tail(factors.cols());
  out.r2 = r.r2;
  out.adj_r2 = r.adj_r2;
  out.lag = r.lag;
  return out;
}

StrategyTrack combine_portfolios(const std::vector<const StrategyTrack*>& tracks, const std::vector<double>& weights) {
  if (tracks.empty() || tracks.size() != weights.size()) throw std::invalid_argument("combine_portfolios: one weight per track");
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(wsum - 1.0) > 1e-12) throw std::invalid_argument("combine_portfolios: weights must sum to one");
  const StrategyTrack& first = *tracks.front();
  for (const StrategyTrack* t : tracks) {
    if (t->long_short.size() != first.long_short.size() || t->quintile.rows() != first.quintile.rows()) {
      throw LengthMismatch("combine_portfolios: tracks have different lengths");
    }
  }
  StrategyTrack out;
  out.name = "combo";
  out.orientation = first.orientation;
  out.dates = first.dates;
  out.cost_fraction = first.cost_fraction;
  out.quintile = Eigen::MatrixXd::Zero(first.quintile.rows(), 5);
  out.long_short = Eigen::VectorXd::Zero(first.long_short.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    out.name += (i ? "+" : ":") + tracks[i]->name;
    if (weights[i] == 0.0) continue;  // keeps a zero-weight track's NaN periods out
    out.long_short += weights[i] * tracks[i]->long_short;
    out.quintile += weights[i] * tracks[i]->quintile;
  }
  return out;
}

AllocationReport allocation_report(const StrategyTrack& a, const StrategyTrack& b,
                                   const std::vector<std::string>& currencies) {
  if (a.assignments.size() != b.assignments.size()) throw LengthMismatch("allocation_report: tracks differ in length");
  const auto pa = positions(a), pb = positions(b);
  AllocationReport rep;
  int counted = 0;
  for (std::size_t c = 0; c < currencies.size(); ++c) {
    AllocationRow row;
    row.currency = currencies[c];
    int den = 0;
    for (std::size_t p = 0; p < pa.size(); ++p) {
      const bool in_a = a.assignments[p][c] != 0, in_b = b.assignments[p][c] != 0;
      if (!in_a && !in_b) continue;
      ++den;
      const int sa = pa[p][c], sb = pb[p][c];
      row.buy_a += sa == 1;
      row.sell_a += sa == -1;
      row.buy_b += sb == 1;
      row.sell_b += sb == -1;
      row.diff += sa != sb;
    }
    if (den > 0) {
      for (double* v : {&row.buy_a, &row.sell_a, &row.buy_b, &row.sell_b, &row.diff}) *v /= den;
      rep.average.buy_a += row.buy_a;
      rep.average.sell_a += row.sell_a;
      rep.average.buy_b += row.buy_b;
      rep.average.sell_b += row.sell_b;
      rep.average.diff += row.diff;
      ++counted;
    }
    rep.rows.push_back(row);
  }
  rep.average.currency = "average";
  if (counted > 0) {
    for (double* v : {&rep.average.buy_a, &rep.average.sell_a, &rep.average.buy_b, &rep.average.sell_b, &rep.average.diff})
      *v /= counted;
  }
  return rep;
}

}  // namespace fxnet
