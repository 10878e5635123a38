#include "fxnet/implied_variance.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>
#include <cstdint>
#include <limits>

#include "fxnet/error.hpp"

namespace fxnet {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / M_SQRT2); }

double norm_inv(double p) { return -M_SQRT2 * boost::math::erfc_inv(2.0 * p); }

double gk_price(double forward, double strike, double vol, double tenor, double bond, OptionKind kind) {
  const double sd = vol * std::sqrt(tenor);
  if (!(sd > 1e-300)) {
    const double intrinsic = kind == OptionKind::Call ? forward - strike : strike - forward;
    return bond * std::max(intrinsic, 0.0);
  }
  const double d1 = (std::log(forward / strike) + 0.5 * sd * sd) / sd;
  const double d2 = d1 - sd;
  if (kind == OptionKind::Call) return bond * (forward * norm_cdf(d1) - strike * norm_cdf(d2));
  return bond * (strike * norm_cdf(-d2) - forward * norm_cdf(-d1));
}

double forward_call_delta(double forward, double strike, double vol, double tenor) {
  const double sd = vol * std::sqrt(tenor);
  if (!(sd > 0.0)) return forward > strike ? 1.0 : (forward < strike ? 0.0 : 0.5);
  return norm_cdf((std::log(forward / strike) + 0.5 * sd * sd) / sd);
}

double bucket_call_delta(DeltaBucket b) {
  switch (b) {
    case DeltaBucket::Put10: return 0.90;
    case DeltaBucket::Put25: return 0.75;
    case DeltaBucket::Atm: return 0.50;
    case DeltaBucket::Call25: return 0.25;
    case DeltaBucket::Call10: return 0.10;
  }
  return 0.5;
}

double strike_from_delta(double forward, double vol, double tenor, DeltaBucket bucket) {
  const double sd = vol * std::sqrt(tenor);
  if (!(sd > 0.0)) return forward;
  if (bucket == DeltaBucket::Atm) return forward * std::exp(0.5 * sd * sd);
  const double d1 = norm_inv(bucket_call_delta(bucket));
  if (!std::isfinite(d1)) throw NoConvergence("delta inverse is not finite");
  return forward * std::exp(-d1 * sd + 0.5 * sd * sd);
}

Smile::Smile(double forward, double bond, double tenor, const std::array<double, 5>& bucket_vols)
    : forward_(forward), bond_(bond), tenor_(tenor) {
  if (!(forward > 0.0) || !(bond > 0.0) || !(tenor > 0.0)) {
    throw std::invalid_argument("Smile: forward, bond and tenor must be positive");
  }
  // bucket order is Put10..Call10 (increasing strike, decreasing call delta)
  for (std::size_t i = 0; i < 5; ++i) {
    const auto b = kDeltaBuckets[4 - i];
    node_delta_[i] = bucket_call_delta(b);
    node_vol_[i] = bucket_vols[static_cast<std::size_t>(b)];
    if (!(node_vol_[i] > 0.0)) throw std::invalid_argument("Smile: vols must be positive");
  }
  for (std::size_t i = 0; i < 5; ++i) {
    const auto b = kDeltaBuckets[i];
    const double v = bucket_vols[i];
    points_[i] = {strike_from_delta(forward, v, tenor, b), v};
  }
}

double Smile::vol_at_delta(double d) const {
  if (d <= node_delta_.front()) return node_vol_.front();
  if (d >= node_delta_.back()) return node_vol_.back();
  std::size_t i = 1;
  while (node_delta_[i] < d) ++i;
  const double w = (d - node_delta_[i - 1]) / (node_delta_[i] - node_delta_[i - 1]);
  return node_vol_[i - 1] + w * (node_vol_[i] - node_vol_[i - 1]);
}

double Smile::vol_at_strike(double strike) const {
  const bool flat = std::all_of(node_vol_.begin(), node_vol_.end(), [&](double v) { return v == node_vol_[0]; });
  if (flat) return node_vol_[0];
  // g is positive at delta 0 and negative at delta 1 for any positive vol
  auto g = [&](double d) { return forward_call_delta(forward_, strike, vol_at_delta(d), tenor_) - d; };
  const double lo = 0.0, hi = 1.0;
  const double glo = g(lo), ghi = g(hi);
  if (glo == 0.0) return vol_at_delta(lo);
  if (ghi == 0.0) return vol_at_delta(hi);
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(50),
                                                        max_iter);
  return vol_at_delta(0.5 * (a + b));
}

Smile build_smile(const std::array<double, 5>& bucket_vols, double forward, double bond, double tenor) {
  Smile s(forward, bond, tenor, bucket_vols);
  const auto& pts = s.points();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (!(pts[i].strike > pts[i - 1].strike)) {
      throw NonMonotoneStrikes("delta-to-strike conversion produced unordered strikes");
    }
  }
  return s;
}

CivResult compute_civ(const Smile& smile, const CivConfig& cfg) {
  if (cfg.n_grid < 2 || !(cfg.range_multiplier > 1.0)) throw std::invalid_argument("compute_civ: bad grid config");
  const int half = std::max(1, cfg.n_grid / 2);
  const double span = std::log(cfg.range_multiplier);
  const double h = span / half;
  const double f = smile.forward();

  // integrals in x = |ln(K/F)|; dK / K^2 = dx / K
  double upper = 0.0, lower = 0.0;
  for (int i = 0; i <= half; ++i) {
    const double w = (i == 0 || i == half) ? 0.5 : 1.0;
    const double k_up = f * std::exp(i * h);
    const double k_dn = f * std::exp(-i * h);
    upper += w * smile.price(k_up, OptionKind::Call) / k_up;
    lower += w * smile.price(k_dn, OptionKind::Put) / k_dn;
  }
  CivResult r;
  r.civ = std::max(0.0, 2.0 / smile.bond() * h * (upper + lower));
  r.n_grid = 2 * half;
  r.strike_lo = f * std::exp(-span);
  r.strike_hi = f * std::exp(span);
  return r;
}

CivResult civ_for_cell(const AlignedDataset::Cell& cell, double tenor, const CivConfig& cfg) {
  const double bond = discount_factor(cell.fx.rate_for, tenor);
  return compute_civ(build_smile(cell.vols, cell.fx.fwd_mid, bond, tenor), cfg);
}

}  // namespace fxnet
