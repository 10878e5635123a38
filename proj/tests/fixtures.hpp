#pragma once

// Simulated fixtures shared by the unit tests and the acceptance binary.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "fxnet/strategy.hpp"

namespace fxnet::testing {

// Generalized FEVD over h = 0..H-1 computed directly in the time domain.
inline Eigen::MatrixXd time_domain_fevd(const std::vector<Eigen::MatrixXd>& lags, const Eigen::MatrixXd& sigma, int h) {
  const Eigen::Index n = sigma.rows();
  std::vector<Eigen::MatrixXd> psi = {Eigen::MatrixXd::Identity(n, n)};
  for (int s = 1; s < h; ++s) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i <= std::min<int>(s, static_cast<int>(lags.size())); ++i) m += lags[i - 1] * psi[s - i];
    psi.push_back(m);
  }
  Eigen::MatrixXd num = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(n);
  for (const auto& p : psi) {
    num += (p * sigma).cwiseAbs2();
    den += (p * sigma * p.transpose()).diagonal();
  }
  Eigen::MatrixXd theta(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) theta(j, k) = num(j, k) / sigma(k, k) / den[j];
  return theta;
}

// Random stable VAR(p) with spectral radius of the companion matrix below 0.9.
inline std::vector<Eigen::MatrixXd> random_stable_var(int n, int p, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 0.3);
  while (true) {
    std::vector<Eigen::MatrixXd> a(static_cast<std::size_t>(p), Eigen::MatrixXd(n, n));
    for (auto& m : a)
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = z(rng) / p;
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n * p, n * p);
    for (int l = 0; l < p; ++l) comp.block(0, n * l, n, n) = a[static_cast<std::size_t>(l)];
    comp.block(n, 0, n * (p - 1), n * (p - 1)).setIdentity();
    if (comp.eigenvalues().cwiseAbs().maxCoeff() < 0.9) return a;
  }
}

inline Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = z(rng);
  return g * g.transpose() / n + 0.2 * Eigen::MatrixXd::Identity(n, n);
}

inline std::vector<std::string> codes(int n) {
  std::vector<std::string> c;
  for (int i = 0; i < n; ++i) c.push_back(std::string(1, static_cast<char>('A' + i / 26)) + static_cast<char>('A' + i % 26));
  return c;
}

// Panel of iid returns with a symmetric full bid-ask spread in log units.
inline ExcessReturnPanel iid_panel(int periods, int n, std::uint64_t seed, double spread = 0.0, double sd = 0.03) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  ExcessReturnPanel rx;
  rx.currencies = codes(n);
  for (int p = 0; p < periods; ++p) {
    rx.start.push_back(Date(2000, 1, 3) + 30 * p);
    rx.end.push_back(Date(2000, 1, 3) + 30 * (p + 1));
  }
  for (Eigen::MatrixXd* m : {&rx.rx, &rx.fx, &rx.ir, &rx.fwd_bid, &rx.fwd_mid, &rx.fwd_ask, &rx.spot_start, &rx.spot_bid,
                             &rx.spot_mid, &rx.spot_ask}) {
    m->resize(periods, n);
  }
  for (int p = 0; p < periods; ++p) {
    for (int c = 0; c < n; ++c) {
      const double s0 = 0.01 * c, ir = 0.001 * (c - n / 2), fx = z(rng);
      rx.spot_start(p, c) = s0;
      rx.fwd_mid(p, c) = s0 + ir;
      rx.spot_mid(p, c) = s0 - fx;
      rx.fwd_bid(p, c) = rx.fwd_mid(p, c) - spread / 2;
      rx.fwd_ask(p, c) = rx.fwd_mid(p, c) + spread / 2;
      rx.spot_bid(p, c) = rx.spot_mid(p, c) - spread / 2;
      rx.spot_ask(p, c) = rx.spot_mid(p, c) + spread / 2;
      rx.ir(p, c) = rx.fwd_mid(p, c) - s0;
      rx.fx(p, c) = s0 - rx.spot_mid(p, c);
      rx.rx(p, c) = rx.ir(p, c) + rx.fx(p, c);
    }
  }
  return rx;
}

inline Eigen::MatrixXd random_signal(Eigen::Index periods, Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd s(periods, n);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = z(rng);
  return s;
}

// Returns from a linear two-factor economy with tradable factors:
// rx = f beta' + e with f ~ N(lambda, sigma_f), so the true risk prices equal
// the factor means and every test asset has zero alpha.
struct PlantedEconomy {
  Eigen::MatrixXd rx, f;
  Eigen::Vector2d lambda;
};

inline PlantedEconomy planted_economy(int t, std::uint64_t seed) {
  PlantedEconomy e;
  e.lambda << 0.005, 0.003;
  Eigen::Matrix2d chol;
  chol << 0.02, 0.0, 0.004, 0.015;
  Eigen::MatrixXd beta(5, 2);
  beta << 0.2, -0.6, 0.6, -0.2, 1.0, 0.0, 1.4, 0.3, 1.8, 0.7;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  e.f.resize(t, 2);
  e.rx.resize(t, 5);
  for (int i = 0; i < t; ++i) {
    const Eigen::Vector2d ft = e.lambda + chol * Eigen::Vector2d(z(rng), z(rng));
    e.f.row(i) = ft.transpose();
    for (int j = 0; j < 5; ++j) e.rx(i, j) = beta.row(j).dot(ft) + 0.01 * z(rng);
  }
  return e;
}

}  // namespace fxnet::testing
