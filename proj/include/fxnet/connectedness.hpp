#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

#include "fxnet/date.hpp"

namespace fxnet {

enum class Band { Short = 0, Medium = 1, Long = 2 };
inline constexpr std::array<Band, 3> kBands = {Band::Short, Band::Medium, Band::Long};
std::string_view to_string(Band b);  // "S", "M", "L"

enum class NetworkMode { Aggregate, Causal };
std::string_view to_string(NetworkMode m);
NetworkMode parse_network_mode(std::string_view s);

// Bands as period intervals in trading days: S = (1, short_edge], M = (short_edge,
// medium_edge], L = (medium_edge, inf]. The zero frequency belongs to L.
struct HorizonBands {
  int short_edge = 5;
  int medium_edge = 20;
  int horizon = 100;  // VMA truncation and Fourier grid length H

  void validate() const;
  // Band of frequency index j on the grid omega_j = 2 pi j / H.
  Band band_of(int j) const;
};

// Psi(0) = I, Psi(h) = sum_{i=1..min(h,p)} Phi_i Psi(h-i) for h < horizon.
std::vector<Eigen::MatrixXd> var_to_vma(const std::vector<Eigen::MatrixXd>& lag_coefs, int horizon);

// sum_h Psi(h) exp(-i omega h)
Eigen::MatrixXcd impulse_transfer(const std::vector<Eigen::MatrixXd>& vma, double omega);

struct BandAdjacency {
  Band band = Band::Short;
  NetworkMode mode = NetworkMode::Aggregate;
  Eigen::MatrixXd raw;         // theta(u, d); row j, column k = share of j's variance due to k
  Eigen::MatrixXd normalized;  // rows rescaled to sum to one within the band; NaN rows when degenerate
  std::vector<bool> degenerate_rows;
};

struct AdjacencySet {
  NetworkMode mode = NetworkMode::Aggregate;
  std::array<BandAdjacency, 3> bands;
  Eigen::MatrixXd raw_total;  // sum over all frequencies
  bool any_degenerate() const;
};

// Horizon-band generalized FEVD on the half grid j = 0..floor(H/2). Interior
// frequencies carry weight 2 for their conjugate twin at 2 pi - omega, so band
// sums partition the full length-H Fourier sum and match the H-step time-domain
// decomposition exactly. In causal mode Sigma is replaced by diag(Sigma).
AdjacencySet fevd_adjacency(const std::vector<Eigen::MatrixXd>& vma, const Eigen::MatrixXd& sigma,
                            const HorizonBands& bands, NetworkMode mode);

// Convenience: VMA then FEVD.
AdjacencySet network_from_var(const std::vector<Eigen::MatrixXd>& lag_coefs, const Eigen::MatrixXd& sigma,
                              const HorizonBands& bands, NetworkMode mode);

// From/to/net per currency for S, M, L and their sum T (index 3).
struct DirectionalMeasures {
  NetworkMode mode = NetworkMode::Aggregate;
  std::array<Eigen::VectorXd, 4> from, to, net;
};

inline constexpr int kTotalBand = 3;
std::string_view band_label(int b);  // S, M, L, T

// absolute = true uses raw theta instead of the within-band normalized matrix.
DirectionalMeasures directional_measures(const AdjacencySet& set, bool absolute = false);
void directional_from_matrix(const Eigen::MatrixXd& theta, Eigen::VectorXd& from, Eigen::VectorXd& to,
                             Eigen::VectorXd& net);

// Directed weighted graph of one band: edge k -> j (k transmits to j) with
// weight theta[j, k] whenever theta[j, k] >= threshold and j != k. Nodes carry
// the net measure. Throws IoError when the file cannot be written.
void export_graphml(const Eigen::MatrixXd& theta, const Eigen::VectorXd& net, const std::vector<std::string>& names,
                    double threshold, const std::string& path);
void export_dot(const Eigen::MatrixXd& theta, const Eigen::VectorXd& net, const std::vector<std::string>& names,
                double threshold, const std::string& path);

}  // namespace fxnet
