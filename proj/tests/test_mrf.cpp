#include <catch2/catch_amalgamated.hpp>

#include "gmdet/mrf_bp.hpp"
#include "gmdet/rng.hpp"

using namespace gmdet;

namespace {

// exact pairwise-MRF marginals P(x_i = +1) by enumeration over {+-1}^n
Eigen::VectorXd enumerate_marginals(const MrfPotentials& pot) {
  const int n = pot.size();
  REQUIRE(n <= 16);
  Eigen::VectorXd num = Eigen::VectorXd::Zero(n);
  double total = 0.0;
  for (long mask = 0; mask < (1L << n); ++mask) {
    std::vector<int> x(n);
    for (int i = 0; i < n; ++i) x[i] = (mask >> i) & 1 ? +1 : -1;
    double lw = 0.0;
    for (int i = 0; i < n; ++i) {
      lw += pot.log_phi(i, x[i]);
      for (int j = i + 1; j < n; ++j) lw += pot.log_psi(i, j, x[i], x[j]);
    }
    const double w = std::exp(lw);
    total += w;
    for (int i = 0; i < n; ++i)
      if (x[i] == +1) num[i] += w;
  }
  return num / total;
}

MrfPotentials make_chain(const Eigen::VectorXd& z, const std::vector<double>& edge) {
  const int n = static_cast<int>(z.size());
  MrfPotentials pot;
  pot.z = z.cast<cplx>();
  pot.coupling = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) pot.coupling(i, i + 1) = pot.coupling(i + 1, i) = edge[i];
  pot.log_prior_gap = Eigen::VectorXd::Zero(n);
  return pot;
}

}  // namespace

TEST_CASE("single variable: belief equals the closed-form posterior") {
  auto rng = make_rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    EffectiveModel m;
    m.H = Eigen::MatrixXcd(1, 1);
    m.H(0, 0) = cplx(g(rng), g(rng));
    m.r = Eigen::VectorXcd(1);
    m.r[0] = cplx(g(rng), g(rng));
    m.sigma2 = 0.5 + std::abs(g(rng));
    auto res = detect_mrf(m, {5, {0.0, 0.0}});
    // posterior ratio under exp(-|r - h x|^2 / (2 sigma2))
    const double d = (std::norm(m.r[0] - m.H(0, 0)) - std::norm(m.r[0] + m.H(0, 0))) / (2 * m.sigma2);
    const double expect = 1.0 / (1.0 + std::exp(d));
    REQUIRE(res.beliefs[0] == Catch::Approx(expect).margin(1e-8));
  }
}

TEST_CASE("chain potentials: BP beliefs are exact on a tree") {
  Eigen::VectorXd z(4);
  z << 0.4, -0.2, 0.7, 0.1;
  auto pot = make_chain(z, {0.8, -0.5, 0.3});
  auto exact = enumerate_marginals(pot);
  auto res = detect_mrf_potentials(pot, {20, {0.0, 0.0}});
  for (int i = 0; i < 4; ++i) REQUIRE(res.beliefs[i] == Catch::Approx(exact[i]).margin(1e-9));
}

TEST_CASE("star potentials: BP beliefs are exact on a tree") {
  const int n = 5;
  Eigen::VectorXd z(n);
  z << 0.1, -0.6, 0.3, 0.2, -0.4;
  MrfPotentials pot;
  pot.z = z.cast<cplx>();
  pot.coupling = Eigen::MatrixXd::Zero(n, n);
  for (int leaf = 1; leaf < n; ++leaf) pot.coupling(0, leaf) = pot.coupling(leaf, 0) = 0.25 * leaf;
  pot.log_prior_gap = Eigen::VectorXd::Zero(n);
  auto exact = enumerate_marginals(pot);
  auto res = detect_mrf_potentials(pot, {20, {0.0, 0.0}});
  for (int i = 0; i < n; ++i) REQUIRE(res.beliefs[i] == Catch::Approx(exact[i]).margin(1e-9));
}

TEST_CASE("full message damping freezes the messages") {
  Eigen::VectorXd z(3);
  z << 1.0, -2.0, 0.5;
  auto pot = make_chain(z, {0.7, 0.7});
  MrfState s = MrfState::init(3);
  mrf_iteration(pot, s, {1.0, 0.0});
  REQUIRE((s.msg.array() - 0.5).abs().maxCoeff() < 1e-15);
  // with uniform messages the belief is the local evidence alone
  for (int i = 0; i < 3; ++i) {
    const double expect = 1.0 / (1.0 + std::exp(-2.0 * z[i]));
    REQUIRE(s.belief[i] == Catch::Approx(expect).margin(1e-12));
  }
}

TEST_CASE("belief damping blends toward the undamped value") {
  Eigen::VectorXd z(3);
  z << 1.0, -2.0, 0.5;
  auto pot = make_chain(z, {0.7, 0.7});
  MrfState a = MrfState::init(3), b = MrfState::init(3);
  mrf_iteration(pot, a, {0.0, 0.0});
  mrf_iteration(pot, b, {0.0, 0.4});
  for (int i = 0; i < 3; ++i)
    REQUIRE(b.belief[i] == Catch::Approx(0.4 * 0.5 + 0.6 * a.belief[i]).margin(1e-12));
}

TEST_CASE("sign symmetry: negating the evidence flips the beliefs") {
  Eigen::VectorXd z(4);
  z << 0.3, -0.9, 1.4, 0.05;
  auto pot = make_chain(z, {0.6, -0.2, 0.9});
  auto neg = pot;
  neg.z = -neg.z;
  auto a = detect_mrf_potentials(pot, {8, {0.2, 0.0}});
  auto b = detect_mrf_potentials(neg, {8, {0.2, 0.0}});
  for (int i = 0; i < 4; ++i) REQUIRE(a.beliefs[i] == Catch::Approx(1.0 - b.beliefs[i]).margin(1e-12));
}

TEST_CASE("beliefs stay normalized under huge couplings") {
  Eigen::VectorXd z(3);
  z << 300.0, -500.0, 100.0;
  auto pot = make_chain(z, {400.0, -350.0});
  auto res = detect_mrf_potentials(pot, {10, {0.3, 0.1}});
  for (int i = 0; i < 3; ++i) {
    REQUIRE(std::isfinite(res.beliefs[i]));
    REQUIRE(res.beliefs[i] >= 0.0);
    REQUIRE(res.beliefs[i] <= 1.0);
  }
}

TEST_CASE("decision tie resolves to +1") {
  Eigen::VectorXd b(2);
  b << 0.5, 0.49999;
  auto d = decisions_from_beliefs(b);
  REQUIRE(d[0] == 1);
  REQUIRE(d[1] == -1);
}

TEST_CASE("trace starts from the local-evidence decision") {
  Eigen::VectorXd z(3);
  z << 0.4, -0.1, 0.0;
  auto pot = make_chain(z, {0.2, 0.2});
  auto trace = detect_mrf_trace(pot, {3, {0.0, 0.0}});
  REQUIRE(trace.size() == 4);
  REQUIRE(trace[0][0] == 1);
  REQUIRE(trace[0][1] == -1);
  REQUIRE(trace[0][2] == 1);  // tie -> +1
}
