#include <catch2/catch_amalgamated.hpp>

#include "gmdet/baselines.hpp"
#include "gmdet/channel.hpp"
#include "gmdet/rng.hpp"

using namespace gmdet;

namespace {

EffectiveModel channel_instance(int n_t, int n_r, int L, int K, double snr_db,
                                std::mt19937_64& rng, std::vector<Eigen::MatrixXcd>* blocks) {
  ChannelTaps taps = generate_channel(n_t, n_r, L, rng);
  Eigen::VectorXcd x(K * n_t);
  for (int i = 0; i < x.size(); ++i) x[i] = (rng() & 1) ? 1.0 : -1.0;
  FrameParams params{K, L - 1, Modulation::bpsk()};
  auto m = simulate_frame(taps, params, x, snr_db, rng);
  if (blocks) *blocks = build_frequency_blocks(taps, K);
  return m;
}

}  // namespace

TEST_CASE("per-frequency MMSE equals the dense whole-matrix MMSE") {
  auto rng = make_rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Eigen::MatrixXcd> blocks;
    auto m = channel_instance(3, 4, 3, 8, 8.0, rng, &blocks);
    Eigen::VectorXcd a = fd_mmse_equalize(blocks, m.r, m.sigma2);
    Eigen::VectorXcd b = mmse_equalize(m);
    REQUIRE((a - b).norm() < 1e-8 * std::max(1.0, b.norm()));
  }
}

TEST_CASE("oracle marginals normalize and agree with a direct enumeration") {
  auto rng = make_rng(62);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  const auto alphabet = alphabet_points(Modulation::bpsk());
  for (int trial = 0; trial < 10; ++trial) {
    EffectiveModel m;
    m.H.resize(5, 4);
    m.r.resize(5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 4; ++j) m.H(i, j) = cplx(g(rng), g(rng));
      m.r[i] = cplx(g(rng), g(rng));
    }
    m.sigma2 = 0.8;
    auto res = map_oracle(m, alphabet);

    // direct reference: accumulate unnormalized posteriors per hypothesis
    Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(4, 2);
    Eigen::VectorXcd best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < 16; ++mask) {
      Eigen::VectorXcd x(4);
      for (int j = 0; j < 4; ++j) x[j] = alphabet[(mask >> j) & 1];
      const double cost = (m.r - m.H * x).squaredNorm();
      const double w = std::exp(-cost / (2.0 * m.sigma2));
      for (int j = 0; j < 4; ++j) ref(j, (mask >> j) & 1) += w;
      if (cost < best_cost) {
        best_cost = cost;
        best = x;
      }
    }
    for (int j = 0; j < 4; ++j) {
      const double row = ref.row(j).sum();
      REQUIRE(std::abs(res.marginals.row(j).sum() - 1.0) < 1e-12);
      for (int a = 0; a < 2; ++a)
        REQUIRE(res.marginals(j, a) == Catch::Approx(ref(j, a) / row).margin(1e-10));
    }
    REQUIRE((res.ml_decision - best).norm() == 0.0);
    REQUIRE(res.ml_cost == Catch::Approx(best_cost).margin(1e-10));
    REQUIRE((ml_oracle(m, alphabet) - best).norm() == 0.0);
    // MAP decision is the per-variable argmax of the marginals
    for (int j = 0; j < 4; ++j) {
      const int a = res.marginals(j, 0) >= res.marginals(j, 1) ? 0 : 1;
      REQUIRE(res.map_decision[j] == alphabet[a]);
    }
  }
}

TEST_CASE("oracle rejects hypothesis spaces past the enumeration guard") {
  EffectiveModel m;
  m.H = Eigen::MatrixXcd::Identity(21, 21);
  m.r = Eigen::VectorXcd::Zero(21);
  m.sigma2 = 1.0;
  REQUIRE_THROWS(map_oracle(m, alphabet_points(Modulation::bpsk())));
}

TEST_CASE("coherent BPSK reference curve anchors") {
  REQUIRE(siso_awgn_ber(7.0) == Catch::Approx(7.8e-4).epsilon(0.02));
  REQUIRE(siso_awgn_ber(0.0) == Catch::Approx(0.0786).epsilon(0.01));
  REQUIRE(siso_awgn_ber(-100.0) == Catch::Approx(0.5).epsilon(1e-3));
  REQUIRE(siso_awgn_ber(10.0) < siso_awgn_ber(6.0));
}
