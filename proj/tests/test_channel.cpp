#include <catch2/catch_amalgamated.hpp>

#include "gmdet/channel.hpp"
#include "gmdet/rng.hpp"

using namespace gmdet;

static Eigen::VectorXcd random_pm1(int n, std::mt19937_64& rng) {
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = (rng() & 1) ? 1.0 : -1.0;
  return v;
}

TEST_CASE("cyclic and CP-explicit receive paths agree") {
  auto rng = make_rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    ChannelTaps taps = generate_channel(3, 2, 4, rng);
    const int K = 6;
    Eigen::VectorXcd x = random_pm1(K * 3, rng);
    auto ya = time_domain_receive(taps, K, x, false);
    auto yb = time_domain_receive(taps, K, x, true);
    for (int q = 0; q < K; ++q) REQUIRE((ya[q] - yb[q]).norm() < 1e-12);
  }
}

TEST_CASE("noiseless frequency observation equals H_eff times the data") {
  auto rng = make_rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    ChannelTaps taps = generate_channel(2, 3, 3, rng);
    const int K = 8;
    Eigen::VectorXcd x = random_pm1(K * 2, rng);
    FrameParams params{K, 2, Modulation::bpsk()};
    auto m = simulate_frame(taps, params, x, std::numeric_limits<double>::infinity(), rng);
    REQUIRE((m.r - m.H * x).norm() / m.r.norm() < 1e-12);
  }
}

TEST_CASE("first-harmonic frequency block for a 4-use 2-tap channel") {
  // sum_l exp(-2 pi j l i / K) H_l at i = 1, K = 4 collapses to H0 - j H1
  auto rng = make_rng(23);
  ChannelTaps taps = generate_channel(2, 2, 2, rng);
  auto blocks = build_frequency_blocks(taps, 4);
  const cplx mj(0.0, -1.0);
  Eigen::MatrixXcd expect = taps.taps[0] + mj * taps.taps[1];
  REQUIRE((blocks[1] - expect).norm() < 1e-14);
  REQUIRE((blocks[0] - (taps.taps[0] + taps.taps[1])).norm() < 1e-14);
  REQUIRE((blocks[2] - (taps.taps[0] - taps.taps[1])).norm() < 1e-14);
}

TEST_CASE("effective matrix blocks carry the scaled twiddle factors") {
  auto rng = make_rng(24);
  const int n_t = 2, K = 4;
  ChannelTaps taps = generate_channel(n_t, 3, 2, rng);
  auto blocks = build_frequency_blocks(taps, K);
  auto H = build_effective_matrix(blocks, K, n_t);
  REQUIRE(H.rows() == K * 3);
  REQUIRE(H.cols() == K * n_t);
  for (int i = 0; i < K; ++i)
    for (int q = 0; q < K; ++q) {
      const cplx w = std::exp(cplx(0, -2.0 * M_PI * q * i / K)) / std::sqrt(double(K));
      Eigen::MatrixXcd expect = w * blocks[i];
      REQUIRE((H.block(i * 3, q * n_t, 3, n_t) - expect).norm() < 1e-12);
    }
}

TEST_CASE("identity taps give a unitary effective matrix") {
  ChannelTaps taps{2, 2, 1, {Eigen::MatrixXcd::Identity(2, 2)}};
  auto H = build_effective_matrix(build_frequency_blocks(taps, 8), 8, 2);
  REQUIRE((H.adjoint() * H - Eigen::MatrixXcd::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("noise variance follows n_t * L / gamma") {
  REQUIRE(snr_db_to_sigma2(10.0, 4, 2) == Catch::Approx(0.8));
  REQUIRE(snr_db_to_sigma2(0.0, 1, 1) == Catch::Approx(1.0));
  REQUIRE(snr_db_to_sigma2(std::numeric_limits<double>::infinity(), 4, 4) == 0.0);
}

TEST_CASE("tap statistics: unit variance per complex entry, zero mean") {
  auto rng = make_rng(25);
  double sum_sq = 0.0;
  cplx mean = 0.0;
  long count = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    ChannelTaps taps = generate_channel(2, 2, 2, rng);
    for (const auto& Hl : taps.taps) {
      sum_sq += Hl.squaredNorm();
      mean += Hl.sum();
      count += Hl.size();
    }
  }
  REQUIRE(sum_sq / count == Catch::Approx(1.0).margin(0.02));
  REQUIRE(std::abs(mean) / count < 0.02);
}

TEST_CASE("noise statistics: empirical variance matches sigma2") {
  auto rng = make_rng(26);
  ChannelTaps taps{1, 1, 1, {Eigen::MatrixXcd::Zero(1, 1)}};
  const int K = 64;
  FrameParams params{K, 0, Modulation::bpsk()};
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(K);
  double sum_sq = 0.0;
  long count = 0;
  const double snr_db = 3.0;
  for (int f = 0; f < 500; ++f) {
    auto m = simulate_frame(taps, params, x, snr_db, rng);
    sum_sq += m.r.squaredNorm();  // unitary DFT preserves the noise energy
    count += m.r.size();
  }
  REQUIRE(sum_sq / count == Catch::Approx(snr_db_to_sigma2(snr_db, 1, 1)).epsilon(0.03));
}

TEST_CASE("K below the channel memory is rejected") {
  auto rng = make_rng(27);
  ChannelTaps taps = generate_channel(2, 2, 5, rng);
  REQUIRE_THROWS_AS(build_frequency_blocks(taps, 4), std::invalid_argument);
}
