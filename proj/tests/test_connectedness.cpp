#include <gtest/gtest.h>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/graphml.hpp>
#include <fstream>
#include <random>
#include <sstream>

#include "fxnet/connectedness.hpp"
#include "fxnet/error.hpp"
#include "fixtures.hpp"
#include "test_util.hpp"

using namespace fxnet;
using namespace fxnet::testing;

TEST(HorizonBands, IntegerBandAssignment) {
  const HorizonBands b;
  EXPECT_EQ(b.band_of(0), Band::Long);
  EXPECT_EQ(b.band_of(4), Band::Long);    // period 25
  EXPECT_EQ(b.band_of(5), Band::Medium);  // period 20 exactly
  EXPECT_EQ(b.band_of(19), Band::Medium);
  EXPECT_EQ(b.band_of(20), Band::Short);  // period 5 exactly
  EXPECT_EQ(b.band_of(50), Band::Short);
}

TEST(HorizonBands, Validation) {
  EXPECT_THROW((HorizonBands{20, 5, 100}.validate()), ConfigError);
  EXPECT_THROW((HorizonBands{5, 20, 30}.validate()), ConfigError);
  EXPECT_NO_THROW(HorizonBands{}.validate());
}

TEST(VarToVma, WhiteNoise) {
  const auto psi = var_to_vma({Eigen::MatrixXd::Zero(2, 2)}, 10);
  ASSERT_EQ(psi.size(), 10u);
  EXPECT_EQ(psi[0], Eigen::MatrixXd::Identity(2, 2));
  for (std::size_t h = 1; h < psi.size(); ++h) EXPECT_EQ(psi[h], Eigen::MatrixXd::Zero(2, 2));
}

TEST(VarToVma, ScalarAr1) {
  const auto psi = var_to_vma({Eigen::MatrixXd::Constant(1, 1, 0.5)}, 30);
  for (int h = 0; h < 30; ++h) EXPECT_DOUBLE_EQ(psi[static_cast<std::size_t>(h)](0, 0), std::pow(0.5, h));
}

TEST(VarToVma, MatchesImpulseSimulation) {
  std::mt19937_64 rng(17);
  const auto a = random_stable_var(2, 2, rng);
  const auto psi = var_to_vma(a, 40);
  for (Eigen::Index k = 0; k < 2; ++k) {
    // unit shock to variable k at time 0 with zero history
    std::vector<Eigen::VectorXd> y(40, Eigen::VectorXd::Zero(2));
    y[0][k] = 1.0;
    for (int t = 1; t < 40; ++t)
      for (int l = 1; l <= 2 && t - l >= 0; ++l) y[static_cast<std::size_t>(t)] += a[static_cast<std::size_t>(l - 1)] * y[static_cast<std::size_t>(t - l)];
    for (std::size_t h = 0; h < 40; ++h) EXPECT_LT((psi[h].col(k) - y[h]).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ImpulseTransfer, ZeroFrequencyIsCumulativeResponse) {
  std::mt19937_64 rng(3);
  const auto psi = var_to_vma(random_stable_var(3, 1, rng), 50);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, 3);
  for (const auto& p : psi) sum += p;
  const Eigen::MatrixXcd t = impulse_transfer(psi, 0.0);
  EXPECT_LT((t.real() - sum).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_EQ(t.imag().cwiseAbs().maxCoeff(), 0.0);
}

TEST(ImpulseTransfer, NoDynamicsIsIdentity) {
  const auto psi = var_to_vma({Eigen::MatrixXd::Zero(2, 2)}, 10);
  for (double w : {0.0, 0.7, M_PI}) EXPECT_LT((impulse_transfer(psi, w) - Eigen::MatrixXcd::Identity(2, 2)).norm(), 1e-15);
}

TEST(ImpulseTransfer, Ar1SpectrumClosedForm) {
  const auto psi = var_to_vma({Eigen::MatrixXd::Constant(1, 1, 0.5)}, 400);
  for (double w = 0.0; w <= M_PI; w += 0.1) {
    EXPECT_NEAR(std::norm(impulse_transfer(psi, w)(0, 0)), 1.0 / (1.25 - std::cos(w)), 1e-6) << w;
  }
}

TEST(FevdAdjacency, MatchesTimeDomainOracle) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 2 + rep % 4, p = 1 + rep % 3;
    const auto a = random_stable_var(n, p, rng);
    const Eigen::MatrixXd sigma = random_spd(n, rng);
    const HorizonBands bands;
    for (NetworkMode mode : {NetworkMode::Aggregate, NetworkMode::Causal}) {
      const AdjacencySet set = network_from_var(a, sigma, bands, mode);
      const Eigen::MatrixXd used = mode == NetworkMode::Causal ? Eigen::MatrixXd(sigma.diagonal().asDiagonal()) : sigma;
      EXPECT_LT((set.raw_total - time_domain_fevd(a, used, bands.horizon)).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(FevdAdjacency, BandsPartitionAndRowsAreStochastic) {
  std::mt19937_64 rng(12);
  const auto a = random_stable_var(4, 2, rng);
  const Eigen::MatrixXd sigma = random_spd(4, rng);
  for (NetworkMode mode : {NetworkMode::Aggregate, NetworkMode::Causal}) {
    const AdjacencySet set = network_from_var(a, sigma, HorizonBands{}, mode);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(4, 4);
    for (const auto& b : set.bands) {
      sum += b.raw;
      EXPECT_GE(b.raw.minCoeff(), 0.0);
      EXPECT_LT((b.normalized.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
    }
    EXPECT_LT((sum - set.raw_total).cwiseAbs().maxCoeff(), 1e-10);
    if (mode == NetworkMode::Causal) EXPECT_LT((set.raw_total.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
  }
}

TEST(FevdAdjacency, DiagonalSystemIsIsolated) {
  Eigen::MatrixXd phi = Eigen::Vector3d(0.5, -0.2, 0.8).asDiagonal();
  Eigen::MatrixXd sigma = Eigen::Vector3d(1.0, 2.0, 0.5).asDiagonal();
  const AdjacencySet agg = network_from_var({phi}, sigma, HorizonBands{}, NetworkMode::Aggregate);
  const AdjacencySet causal = network_from_var({phi}, sigma, HorizonBands{}, NetworkMode::Causal);
  for (std::size_t b = 0; b < 3; ++b) {
    const Eigen::MatrixXd off = agg.bands[b].raw - Eigen::MatrixXd(agg.bands[b].raw.diagonal().asDiagonal());
    EXPECT_EQ(off.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LT((agg.bands[b].normalized - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((agg.bands[b].raw - causal.bands[b].raw).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(FevdAdjacency, OneWaySpillover) {
  Eigen::MatrixXd phi(2, 2);
  phi << 0.5, 0.3, 0.0, 0.5;
  const AdjacencySet set = network_from_var({phi}, Eigen::MatrixXd::Identity(2, 2), HorizonBands{}, NetworkMode::Aggregate);
  EXPECT_GT(set.raw_total(0, 1), 0.0);
  EXPECT_EQ(set.raw_total(1, 0), 0.0);
  for (const auto& b : set.bands) {
    EXPECT_GT(b.normalized(0, 1), 0.0);
    EXPECT_EQ(b.raw(1, 0), 0.0);
    EXPECT_EQ(b.normalized(1, 0), 0.0);
  }
  EXPECT_LT((set.raw_total - time_domain_fevd({phi}, Eigen::MatrixXd::Identity(2, 2), 100)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FevdAdjacency, CausalIgnoresOffDiagonalCovariance) {
  std::mt19937_64 rng(13);
  const auto a = random_stable_var(4, 2, rng);
  Eigen::MatrixXd s1 = random_spd(4, rng);
  Eigen::MatrixXd s2 = s1;
  s2(0, 1) = s2(1, 0) = -0.7 * s1(0, 1);
  s2(2, 3) = s2(3, 2) = 0.1;
  const AdjacencySet x = network_from_var(a, s1, HorizonBands{}, NetworkMode::Causal);
  const AdjacencySet y = network_from_var(a, s2, HorizonBands{}, NetworkMode::Causal);
  for (std::size_t b = 0; b < 3; ++b) {
    EXPECT_TRUE(x.bands[b].raw == y.bands[b].raw);
    EXPECT_TRUE(x.bands[b].normalized == y.bands[b].normalized);
  }
}

TEST(FevdAdjacency, InvariantToVariableScaling) {
  // y -> D y maps Phi to D Phi D^-1 and Sigma to D Sigma D
  std::mt19937_64 rng(14);
  const auto a = random_stable_var(3, 2, rng);
  const Eigen::MatrixXd sigma = random_spd(3, rng);
  const Eigen::Vector3d d(2.0, 0.1, 7.0);
  std::vector<Eigen::MatrixXd> scaled;
  for (const auto& m : a) scaled.push_back(d.asDiagonal() * m * d.cwiseInverse().asDiagonal());
  const Eigen::MatrixXd s2 = d.asDiagonal() * sigma * d.asDiagonal();
  for (NetworkMode mode : {NetworkMode::Aggregate, NetworkMode::Causal}) {
    const AdjacencySet x = network_from_var(a, sigma, HorizonBands{}, mode);
    const AdjacencySet y = network_from_var(scaled, s2, HorizonBands{}, mode);
    for (std::size_t b = 0; b < 3; ++b) EXPECT_LT((x.bands[b].raw - y.bands[b].raw).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(FevdAdjacency, DegenerateBandRowIsFlagged) {
  const AdjacencySet set = network_from_var({Eigen::MatrixXd::Zero(2, 2)}, Eigen::MatrixXd::Identity(2, 2),
                                            HorizonBands{}, NetworkMode::Causal);
  EXPECT_FALSE(set.any_degenerate());
  // H = 1 leaves only omega = 0, so the short and medium bands carry no mass
  const std::vector<Eigen::MatrixXd> psi(1, Eigen::MatrixXd::Identity(2, 2));
  const AdjacencySet one = fevd_adjacency(psi, Eigen::MatrixXd::Identity(2, 2), HorizonBands{}, NetworkMode::Causal);
  EXPECT_TRUE(one.any_degenerate());
  EXPECT_TRUE(one.bands[0].degenerate_rows[0]);
  EXPECT_TRUE(std::isnan(one.bands[0].normalized(0, 0)));
  EXPECT_FALSE(one.bands[2].degenerate_rows[0]);
  EXPECT_EQ(one.bands[2].normalized, Eigen::MatrixXd::Identity(2, 2));
}

TEST(DirectionalMeasures, IdentityIsIsolated) {
  Eigen::VectorXd f, t, n;
  directional_from_matrix(Eigen::MatrixXd::Identity(4, 4), f, t, n);
  EXPECT_EQ(f, Eigen::VectorXd::Zero(4));
  EXPECT_EQ(t, Eigen::VectorXd::Zero(4));
  EXPECT_EQ(n, Eigen::VectorXd::Zero(4));
}

TEST(DirectionalMeasures, PureTransmitter) {
  Eigen::Matrix3d theta;
  theta << 1.0, 0.0, 0.0, 0.4, 0.6, 0.0, 0.3, 0.2, 0.5;
  Eigen::VectorXd f, t, n;
  directional_from_matrix(theta, f, t, n);
  EXPECT_EQ(f[0], 0.0);
  EXPECT_DOUBLE_EQ(t[0], 0.7);
  EXPECT_GT(n[0], 0.0);
  EXPECT_NEAR(n.sum(), 0.0, 1e-15);
}

TEST(DirectionalMeasures, NetSumsToZeroAndTotalsAdd) {
  std::mt19937_64 rng(15);
  const auto a = random_stable_var(5, 1, rng);
  const AdjacencySet set = network_from_var(a, random_spd(5, rng), HorizonBands{}, NetworkMode::Aggregate);
  for (bool absolute : {false, true}) {
    const DirectionalMeasures m = directional_measures(set, absolute);
    for (int b = 0; b < 4; ++b) {
      EXPECT_NEAR(m.net[static_cast<std::size_t>(b)].sum(), 0.0, 1e-12);
      EXPECT_TRUE(m.net[static_cast<std::size_t>(b)] == m.to[static_cast<std::size_t>(b)] - m.from[static_cast<std::size_t>(b)]);
    }
    EXPECT_LT((m.from[kTotalBand] - m.from[0] - m.from[1] - m.from[2]).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((m.to[kTotalBand] - m.to[0] - m.to[1] - m.to[2]).cwiseAbs().maxCoeff(), 1e-15);
  }
}

namespace {

struct Node {
  std::string code;
  double net = 0.0;
  int sign = 0;
};
struct Edge {
  double weight = 0.0;
};
using Graph = boost::adjacency_list<boost::vecS, boost::vecS, boost::directedS, Node, Edge>;

Graph read_graph(const std::string& path) {
  Graph g;
  boost::dynamic_properties dp(boost::ignore_other_properties);
  dp.property("code", boost::get(&Node::code, g));
  dp.property("net", boost::get(&Node::net, g));
  dp.property("sign", boost::get(&Node::sign, g));
  dp.property("weight", boost::get(&Edge::weight, g));
  std::ifstream in(path);
  boost::read_graphml(in, g, dp);
  return g;
}

}  // namespace

TEST(ExportGraph, GraphmlRoundTrip) {
  std::mt19937_64 rng(16);
  const AdjacencySet set = network_from_var(random_stable_var(4, 1, rng), random_spd(4, rng), HorizonBands{},
                                            NetworkMode::Causal);
  const Eigen::MatrixXd& theta = set.bands[0].normalized;
  const DirectionalMeasures m = directional_measures(set);
  const std::vector<std::string> names = {"AUD", "CAD", "EUR", "J&P"};
  TempDir dir;
  export_graphml(theta, m.net[0], names, 0.0, dir.file("g.graphml"));
  const Graph g = read_graph(dir.file("g.graphml"));
  ASSERT_EQ(boost::num_vertices(g), 4u);
  EXPECT_EQ(boost::num_edges(g), 12u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(g[i].code, names[i]);
    EXPECT_EQ(g[i].net, m.net[0][static_cast<Eigen::Index>(i)]);
  }
  for (auto [it, end] = boost::edges(g); it != end; ++it) {
    const auto k = boost::source(*it, g), j = boost::target(*it, g);
    EXPECT_EQ(g[*it].weight, theta(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)));
  }
}

TEST(ExportGraph, ThresholdAboveMaxHasNoEdges) {
  Eigen::Matrix3d theta;
  theta << 0.5, 0.3, 0.2, 0.1, 0.8, 0.1, 0.25, 0.25, 0.5;
  TempDir dir;
  export_graphml(theta, Eigen::Vector3d::Zero(), {"A", "B", "C"}, 0.81, dir.file("g.graphml"));
  const Graph g = read_graph(dir.file("g.graphml"));
  EXPECT_EQ(boost::num_vertices(g), 3u);
  EXPECT_EQ(boost::num_edges(g), 0u);
  export_graphml(theta, Eigen::Vector3d::Zero(), {"A", "B", "C"}, 0.25, dir.file("h.graphml"));
  EXPECT_EQ(boost::num_edges(read_graph(dir.file("h.graphml"))), 3u);
}

TEST(ExportGraph, DotEdgeCount) {
  const Eigen::MatrixXd theta = Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0);
  TempDir dir;
  export_dot(theta, Eigen::Vector3d(0.1, -0.1, 0.0), {"A", "B", "C"}, 0.0, dir.file("g.dot"));
  const std::string s = fxnet::testing::read_text(dir.file("g.dot"));
  std::size_t edges = 0;
  for (std::size_t pos = 0; (pos = s.find("->", pos)) != std::string::npos; ++pos) ++edges;
  EXPECT_EQ(edges, 6u);
}

TEST(ExportGraph, Errors) {
  const Eigen::MatrixXd theta = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(export_graphml(theta, Eigen::Vector2d::Zero(), {"A", "B"}, -1.0, "x"), std::invalid_argument);
  EXPECT_THROW(export_graphml(theta, Eigen::Vector2d::Zero(), {"A", "B"}, 0.0, "/nonexistent/dir/g.graphml"), IoError);
}
