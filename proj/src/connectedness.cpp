#include "fxnet/connectedness.hpp"

#include <cmath>
#include <fstream>

#include "fxnet/csv.hpp"
#include "fxnet/error.hpp"

namespace fxnet {

std::string_view to_string(Band b) {
  switch (b) {
    case Band::Short: return "S";
    case Band::Medium: return "M";
    case Band::Long: return "L";
  }
  return "?";
}

std::string_view band_label(int b) {
  static constexpr std::array<std::string_view, 4> labels = {"S", "M", "L", "T"};
  return labels.at(static_cast<std::size_t>(b));
}

std::string_view to_string(NetworkMode m) { return m == NetworkMode::Aggregate ? "aggregate" : "causal"; }

NetworkMode parse_network_mode(std::string_view s) {
  if (s == "aggregate") return NetworkMode::Aggregate;
  if (s == "causal") return NetworkMode::Causal;
  throw ConfigError("unknown network mode '" + std::string(s) + "'");
}

void HorizonBands::validate() const {
  if (short_edge <= 1 || medium_edge <= short_edge) throw ConfigError("bands: need 1 < short_edge < medium_edge");
  if (horizon < 2 * medium_edge) throw ConfigError("bands: horizon must be at least twice the medium edge");
}

Band HorizonBands::band_of(int j) const {
  if (j == 0) return Band::Long;
  // period H / j compared without floating point
  if (horizon <= short_edge * j) return Band::Short;
  if (horizon <= medium_edge * j) return Band::Medium;
  return Band::Long;
}

std::vector<Eigen::MatrixXd> var_to_vma(const std::vector<Eigen::MatrixXd>& lag_coefs, int horizon) {
  if (lag_coefs.empty()) throw std::invalid_argument("var_to_vma: no lag matrices");
  const Eigen::Index n = lag_coefs.front().rows();
  std::vector<Eigen::MatrixXd> psi;
  psi.reserve(static_cast<std::size_t>(horizon));
  psi.push_back(Eigen::MatrixXd::Identity(n, n));
  const int p = static_cast<int>(lag_coefs.size());
  for (int h = 1; h < horizon; ++h) {
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i <= std::min(h, p); ++i) next.noalias() += lag_coefs[static_cast<std::size_t>(i - 1)] * psi[static_cast<std::size_t>(h - i)];
    psi.push_back(std::move(next));
  }
  return psi;
}

Eigen::MatrixXcd impulse_transfer(const std::vector<Eigen::MatrixXd>& vma, double omega) {
  const Eigen::Index n = vma.front().rows();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t h = 0; h < vma.size(); ++h) {
    const std::complex<double> phase = std::polar(1.0, -omega * static_cast<double>(h));
    out += phase * vma[h].cast<std::complex<double>>();
  }
  return out;
}

bool AdjacencySet::any_degenerate() const {
  for (const auto& b : bands)
    for (bool d : b.degenerate_rows)
      if (d) return true;
  return false;
}

AdjacencySet fevd_adjacency(const std::vector<Eigen::MatrixXd>& vma, const Eigen::MatrixXd& sigma,
                            const HorizonBands& bands, NetworkMode mode) {
  const int h = static_cast<int>(vma.size());
  const Eigen::Index n = sigma.rows();
  const Eigen::VectorXd sigma_kk = sigma.diagonal();
  const Eigen::MatrixXd used = mode == NetworkMode::Causal ? Eigen::MatrixXd(sigma_kk.asDiagonal()) : sigma;
  const Eigen::MatrixXcd used_c = used.cast<std::complex<double>>();

  std::array<Eigen::MatrixXd, 3> num;
  for (auto& m : num) m = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(n);

  HorizonBands grid = bands;
  grid.horizon = h;
  for (int j = 0; j <= h / 2; ++j) {
    const double weight = (j == 0 || (h % 2 == 0 && j == h / 2)) ? 1.0 : 2.0;
    const double omega = 2.0 * M_PI * j / h;
    const Eigen::MatrixXcd psi = impulse_transfer(vma, omega);
    const Eigen::MatrixXcd ps = psi * used_c;
    num[static_cast<std::size_t>(grid.band_of(j))] += weight * ps.cwiseAbs2();
    den += weight * (ps * psi.adjoint()).diagonal().real();
  }

  AdjacencySet set;
  set.mode = mode;
  set.raw_total = Eigen::MatrixXd::Zero(n, n);
  for (Band b : kBands) {
    BandAdjacency& adj = set.bands[static_cast<std::size_t>(b)];
    adj.band = b;
    adj.mode = mode;
    adj.raw.resize(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) adj.raw(r, c) = num[static_cast<std::size_t>(b)](r, c) / sigma_kk[c] / den[r];
    set.raw_total += adj.raw;
    adj.normalized = adj.raw;
    adj.degenerate_rows.assign(static_cast<std::size_t>(n), false);
    for (Eigen::Index r = 0; r < n; ++r) {
      const double s = adj.raw.row(r).sum();
      if (s > 0.0 && std::isfinite(s)) {
        adj.normalized.row(r) /= s;
      } else {
        adj.normalized.row(r).setConstant(std::nan(""));
        adj.degenerate_rows[static_cast<std::size_t>(r)] = true;
      }
    }
  }
  return set;
}

AdjacencySet network_from_var(const std::vector<Eigen::MatrixXd>& lag_coefs, const Eigen::MatrixXd& sigma,
                              const HorizonBands& bands, NetworkMode mode) {
  return fevd_adjacency(var_to_vma(lag_coefs, bands.horizon), sigma, bands, mode);
}

void directional_from_matrix(const Eigen::MatrixXd& theta, Eigen::VectorXd& from, Eigen::VectorXd& to,
                             Eigen::VectorXd& net) {
  const Eigen::VectorXd diag = theta.diagonal();
  from = theta.rowwise().sum() - diag;
  to = theta.colwise().sum().transpose() - diag;
  net = to - from;
}

DirectionalMeasures directional_measures(const AdjacencySet& set, bool absolute) {
  DirectionalMeasures m;
  m.mode = set.mode;
  const Eigen::Index n = set.raw_total.rows();
  for (auto* v : {&m.from[kTotalBand], &m.to[kTotalBand], &m.net[kTotalBand]}) *v = Eigen::VectorXd::Zero(n);
  for (std::size_t b = 0; b < 3; ++b) {
    const Eigen::MatrixXd& theta = absolute ? set.bands[b].raw : set.bands[b].normalized;
    directional_from_matrix(theta, m.from[b], m.to[b], m.net[b]);
    m.from[kTotalBand] += m.from[b];
    m.to[kTotalBand] += m.to[b];
  }
  m.net[kTotalBand] = m.to[kTotalBand] - m.from[kTotalBand];
  return m;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void check_graph_args(const Eigen::MatrixXd& theta, const Eigen::VectorXd& net, const std::vector<std::string>& names,
                      double threshold) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("export_graph: threshold must be >= 0");
  if (theta.rows() != theta.cols() || net.size() != theta.rows() ||
      static_cast<Eigen::Index>(names.size()) != theta.rows()) {
    throw std::invalid_argument("export_graph: inconsistent sizes");
  }
}

}  // namespace

void export_graphml(const Eigen::MatrixXd& theta, const Eigen::VectorXd& net, const std::vector<std::string>& names,
                    double threshold, const std::string& path) {
  check_graph_args(theta, net, names, threshold);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      << "  <key id=\"code\" for=\"node\" attr.name=\"code\" attr.type=\"string\"/>\n"
      << "  <key id=\"net\" for=\"node\" attr.name=\"net\" attr.type=\"double\"/>\n"
      << "  <key id=\"sign\" for=\"node\" attr.name=\"sign\" attr.type=\"int\"/>\n"
      << "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n"
      << "  <graph id=\"G\" edgedefault=\"directed\">\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double v = net[static_cast<Eigen::Index>(i)];
    out << "    <node id=\"n" << i << "\"><data key=\"code\">" << xml_escape(names[i]) << "</data><data key=\"net\">" << csv::fmt(v) << "</data><data key=\"sign\">"
        << (v > 0 ? 1 : (v < 0 ? -1 : 0)) << "</data></node>\n";
  }
  int e = 0;
  for (Eigen::Index j = 0; j < theta.rows(); ++j) {
    for (Eigen::Index k = 0; k < theta.cols(); ++k) {
      if (j == k || !(theta(j, k) >= threshold)) continue;
      out << "    <edge id=\"e" << e++ << "\" source=\"n" << k << "\" target=\"n" << j << "\"><data key=\"weight\">"
          << csv::fmt(theta(j, k)) << "</data></edge>\n";
    }
  }
  out << "  </graph>\n</graphml>\n";
  if (!out) throw IoError("write failed for " + path);
}

void export_dot(const Eigen::MatrixXd& theta, const Eigen::VectorXd& net, const std::vector<std::string>& names,
                double threshold, const std::string& path) {
  check_graph_args(theta, net, names, threshold);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "digraph network {\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double v = net[static_cast<Eigen::Index>(i)];
    out << "  \"" << names[i] << "\" [net=" << csv::fmt(v) << ", color=" << (v >= 0 ? "\"red\"" : "\"blue\"") << "];\n";
  }
  for (Eigen::Index j = 0; j < theta.rows(); ++j) {
    for (Eigen::Index k = 0; k < theta.cols(); ++k) {
      if (j == k || !(theta(j, k) >= threshold)) continue;
      out << "  \"" << names[static_cast<std::size_t>(k)] << "\" -> \"" << names[static_cast<std::size_t>(j)]
          << "\" [weight=" << csv::fmt(theta(j, k)) << "];\n";
    }
  }
  out << "}\n";
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace fxnet
