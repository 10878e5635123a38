#include "fxnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <random>

#include "fxnet/connectedness.hpp"
#include "fxnet/error.hpp"
#include "fxnet/strategy.hpp"

namespace fxnet {

void SyntheticConfig::validate() const {
  if (n_currencies < 5) throw ConfigError("synthetic: need at least 5 currencies");
  if (n_days < 60) throw ConfigError("synthetic: need at least 60 days");
  if (!(own_persistence >= 0.0 && own_persistence < 1.0)) throw ConfigError("synthetic: persistence must be in [0, 1)");
  if (!(shock_sd > 0.0)) throw ConfigError("synthetic: shock_sd must be positive");
  if (!(shock_correlation >= 0.0 && shock_correlation < 1.0)) throw ConfigError("synthetic: shock correlation in [0, 1)");
  if (!(spread_bp >= 0.0)) throw ConfigError("synthetic: spread_bp must be >= 0");
  if (!(dollar_factor_share >= 0.0 && dollar_factor_share <= 1.0)) throw ConfigError("synthetic: factor share in [0, 1]");
  if (!(std::abs(transmission) <= 1.0)) throw ConfigError("synthetic: |transmission| must be <= 1");
}

std::vector<std::string> synthetic_codes(int n) {
  static const std::vector<std::string> base = {"AUD", "BRL", "CAD", "CHF", "CZK", "DKK", "EUR", "GBP", "HUF", "ILS",
                                                "JPY", "KRW", "MXN", "NOK", "NZD", "PLN", "SEK", "SGD", "TRY", "ZAR"};
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    if (i < static_cast<int>(base.size())) {
      out.push_back(base[static_cast<std::size_t>(i)]);
    } else {
      const std::string num = std::to_string(i);
      out.push_back("X" + std::string(2 - std::min<std::size_t>(2, num.size()), '0') + num);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::vector<Date> business_days(Date start, int n) {
  std::vector<Date> out;
  Date d = start;
  while (static_cast<int>(out.size()) < n) {
    const unsigned wd = std::chrono::weekday(d.sys()).c_encoding();
    if (wd != 0 && wd != 6) out.push_back(d);
    d = d + 1;
  }
  return out;
}

}  // namespace

SyntheticMarket generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_currencies, t_days = cfg.n_days;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  SyntheticMarket m;
  SyntheticTruth& tr = m.truth;
  tr.currencies = synthetic_codes(n);

  tr.var_coef = cfg.own_persistence * Eigen::MatrixXd::Identity(n, n);
  if (cfg.transmitter && !cfg.zero_linkage) {
    tr.transmitter = tr.currencies[0];
    for (int j = 1; j < n; ++j) tr.var_coef(j, 0) = cfg.transmission;
  }
  const double rho = cfg.zero_linkage ? 0.0 : cfg.shock_correlation;
  const double s2 = cfg.shock_sd * cfg.shock_sd;
  tr.shock_cov = s2 * ((1.0 - rho) * Eigen::MatrixXd::Identity(n, n) + rho * Eigen::MatrixXd::Ones(n, n));
  const Eigen::MatrixXd shock_chol = tr.shock_cov.llt().matrixL();

  tr.mean_vol.resize(n);
  tr.mean_rate.resize(n);
  Eigen::VectorXd rr(n), bf(n), spot0(n);
  for (int c = 0; c < n; ++c) {
    tr.mean_vol[c] = 0.06 + 0.10 * u01(rng);
    rr[c] = (u01(rng) - 0.5) * 0.04;
    bf[c] = 0.002 + 0.004 * u01(rng);
    spot0[c] = std::exp(z(rng));
  }
  // rates evenly spread over the carry gap, assigned to currencies by a seeded permutation
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int c = 0; c < n; ++c) {
    const double pos = static_cast<double>(perm[static_cast<std::size_t>(c)]) / (n - 1);
    tr.mean_rate[c] = cfg.usd_rate + cfg.carry_spread * (pos - 0.5);
  }

  tr.entry_day.assign(static_cast<std::size_t>(n), 0);
  if (cfg.staggered_entry) {
    tr.entry_day[static_cast<std::size_t>(n - 2)] = t_days / 4;
    tr.entry_day[static_cast<std::size_t>(n - 1)] = t_days / 2;
  }

  // expected monthly carry spread: log forward premium of the high-rate quintile minus the low-rate one
  {
    Eigen::VectorXd premium(n);
    for (int c = 0; c < n; ++c)
      premium[c] = std::log1p(tr.mean_rate[c] * kOneMonth) - std::log1p(cfg.usd_rate * kOneMonth);
    std::vector<double> sorted(premium.data(), premium.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const auto sizes = quintile_sizes(n);
    double hi = 0.0, lo = 0.0;
    for (int i = 0; i < sizes[0]; ++i) hi += sorted[static_cast<std::size_t>(i)];
    for (int i = 0; i < sizes[4]; ++i) lo += sorted[static_cast<std::size_t>(n - 1 - i)];
    tr.carry_premium_monthly = hi / sizes[0] - lo / sizes[4];
  }

  const std::vector<Date> days = business_days(cfg.start, t_days);
  m.atm_vol = Eigen::MatrixXd::Constant(t_days, n, std::nan(""));
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd rate_dev = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd log_spot = spot0.array().log();
  const double phi_rate = 0.99;
  const double rate_innov = cfg.rate_noise * std::sqrt(1.0 - phi_rate * phi_rate);
  const double w_common = std::sqrt(cfg.dollar_factor_share), w_idio = std::sqrt(1.0 - cfg.dollar_factor_share);
  const int burn = 50;

  for (int t = -burn; t < t_days; ++t) {
    Eigen::VectorXd e(n);
    for (int c = 0; c < n; ++c) e[c] = z(rng);
    y = tr.var_coef * y + shock_chol * e;
    for (int c = 0; c < n; ++c) rate_dev[c] = phi_rate * rate_dev[c] + rate_innov * z(rng);
    const double common = z(rng);
    Eigen::VectorXd idio(n);
    for (int c = 0; c < n; ++c) idio[c] = z(rng);
    if (t < 0) continue;

    const Date d = days[static_cast<std::size_t>(t)];
    for (int c = 0; c < n; ++c) {
      const double vol = tr.mean_vol[c] * std::sqrt(std::max(1.0 + y[c], 0.2));
      if (t > 0) log_spot[c] += vol / std::sqrt(252.0) * (w_common * common + w_idio * idio[c]);
      if (t < tr.entry_day[static_cast<std::size_t>(c)]) continue;
      m.atm_vol(t, c) = vol;
      const std::string& code = tr.currencies[static_cast<std::size_t>(c)];

      std::array<double, 5> vols{};
      vols[static_cast<std::size_t>(DeltaBucket::Put10)] = vol + 3.5 * bf[c] - rr[c] * vol;
      vols[static_cast<std::size_t>(DeltaBucket::Put25)] = vol + bf[c] - 0.5 * rr[c] * vol;
      vols[static_cast<std::size_t>(DeltaBucket::Atm)] = vol;
      vols[static_cast<std::size_t>(DeltaBucket::Call25)] = vol + bf[c] + 0.5 * rr[c] * vol;
      vols[static_cast<std::size_t>(DeltaBucket::Call10)] = vol + 3.5 * bf[c] + rr[c] * vol;
      for (DeltaBucket b : kDeltaBuckets) {
        m.surface.add(OptionQuote{code, d, kOneMonth, b, vols[static_cast<std::size_t>(b)]});
      }

      FxRecord r;
      r.currency = code;
      r.date = d;
      r.rate_dom = cfg.usd_rate;
      r.rate_for = tr.mean_rate[c] + rate_dev[c];
      r.spot_mid = std::exp(log_spot[c]);
      r.fwd_mid = r.spot_mid * (1.0 + r.rate_for * kOneMonth) / (1.0 + r.rate_dom * kOneMonth);
      const double hs = 0.5 * cfg.spread_bp * 1e-4 * r.spot_mid;
      const double hf = 1.5 * 0.5 * cfg.spread_bp * 1e-4 * r.fwd_mid;
      r.spot_bid = r.spot_mid - hs;
      r.spot_ask = r.spot_mid + hs;
      r.fwd_bid = r.fwd_mid - hf;
      r.fwd_ask = r.fwd_mid + hf;
      m.fx.push_back(r);
    }
  }
  return m;
}

std::string truth_json(const SyntheticTruth& tr) {
  using nlohmann::json;
  auto mat = [](const Eigen::MatrixXd& a) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  auto vec = [](const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); };

  json j;
  j["currencies"] = tr.currencies;
  j["transmitter"] = tr.transmitter;
  j["var_coef"] = mat(tr.var_coef);
  j["shock_cov"] = mat(tr.shock_cov);
  j["mean_vol"] = vec(tr.mean_vol);
  j["mean_rate"] = vec(tr.mean_rate);
  j["entry_day"] = tr.entry_day;
  j["lambda"] = {{"car", tr.carry_premium_monthly}};
  const HorizonBands bands;
  for (NetworkMode mode : {NetworkMode::Aggregate, NetworkMode::Causal}) {
    const AdjacencySet set = network_from_var({tr.var_coef}, tr.shock_cov, bands, mode);
    const DirectionalMeasures dm = directional_measures(set);
    json adj;
    for (Band b : kBands) adj[std::string(to_string(b))] = mat(set.bands[static_cast<std::size_t>(b)].raw);
    adj["total"] = mat(set.raw_total);
    adj["to"] = vec(dm.to[kTotalBand]);
    adj["net"] = vec(dm.net[kTotalBand]);
    j["adjacency"][std::string(to_string(mode))] = adj;
  }
  return j.dump(2) + "\n";
}

void write_synthetic(const SyntheticMarket& m, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  save_option_surface(m.surface, dir + "/options.csv");
  save_fx_panel(m.fx, dir + "/fx.csv");
  std::ofstream out(dir + "/truth.json");
  if (!out) throw IoError("cannot write " + dir + "/truth.json");
  out << truth_json(m.truth);
}

}  // namespace fxnet
