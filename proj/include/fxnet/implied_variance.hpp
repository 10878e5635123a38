#pragma once

#include <array>
#include <cmath>

#include "fxnet/market_data.hpp"

namespace fxnet {

enum class OptionKind { Call, Put };

double norm_cdf(double x);
double norm_inv(double p);

// Garman-Kohlhagen value written in forward terms: B * Black(F, K, sigma, tau).
// In the zero-vol limit the value collapses to discounted intrinsic value.
double gk_price(double forward, double strike, double vol, double tenor, double bond, OptionKind kind);

// Forward (non-premium-adjusted) Black call delta N(d1).
double forward_call_delta(double forward, double strike, double vol, double tenor);

// Call-delta coordinate of each bucket: 10d-put and 25d-put are the 0.90 and
// 0.75 call deltas, ATM is the delta-neutral straddle (call delta 0.5).
double bucket_call_delta(DeltaBucket b);

// Strike whose forward delta matches the bucket. ATM maps to F*exp(sigma^2 tau / 2).
double strike_from_delta(double forward, double vol, double tenor, DeltaBucket bucket);

struct SmilePoint {
  double strike;
  double vol;
};

// A five-point smile in strike space. Volatility is piecewise linear in call
// delta between the quoted nodes and flat beyond the 10-delta wings.
class Smile {
 public:
  Smile(double forward, double bond, double tenor, const std::array<double, 5>& bucket_vols);

  double forward() const { return forward_; }
  double bond() const { return bond_; }
  double tenor() const { return tenor_; }
  const std::array<SmilePoint, 5>& points() const { return points_; }

  // Interpolated vol at a call delta in (0, 1).
  double vol_at_delta(double call_delta) const;

  // Vol at an arbitrary strike. Solves delta = N(d1(K, vol(delta))) by bisection
  // on the delta coordinate.
  double vol_at_strike(double strike) const;

  double price(double strike, OptionKind kind) const {
    return gk_price(forward_, strike, vol_at_strike(strike), tenor_, bond_, kind);
  }

 private:
  double forward_;
  double bond_;
  double tenor_;
  // nodes sorted by increasing call delta: 10d-call, 25d-call, ATM, 25d-put, 10d-put
  std::array<double, 5> node_delta_;
  std::array<double, 5> node_vol_;
  std::array<SmilePoint, 5> points_;  // increasing strike
};

// Throws NonMonotoneStrikes if the converted strikes are not strictly increasing.
Smile build_smile(const std::array<double, 5>& bucket_vols, double forward, double bond, double tenor);

struct CivConfig {
  int n_grid = 2000;                // strike nodes across both halves of the range
  double range_multiplier = M_E;    // strikes span [F / m, F * m]
};

struct CivResult {
  double civ = 0.0;  // variance of the log FX change over the option tenor, not annualized
  int n_grid = 0;
  double strike_lo = 0.0;
  double strike_hi = 0.0;
};

// Model-free implied variance: (2/B) * [int_F^inf C/K^2 dK + int_0^F P/K^2 dK],
// trapezoid rule in log-strike with the forward as a shared node.
CivResult compute_civ(const Smile& smile, const CivConfig& cfg = {});

// Bond price for the foreign leg of a 1M contract from a simple annual rate.
inline double discount_factor(double simple_rate, double tenor) { return 1.0 / (1.0 + simple_rate * tenor); }

// CIV of an aligned cell: forward mid and foreign discount factor from the FX record.
CivResult civ_for_cell(const AlignedDataset::Cell& cell, double tenor, const CivConfig& cfg = {});

}  // namespace fxnet
