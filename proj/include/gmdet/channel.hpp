#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "gmdet/dft.hpp"
#include "gmdet/modulation.hpp"

namespace gmdet {

/// One fading realization: L per-path complex gain matrices, each n_r x n_t.
/// Entry (j,i) of tap l is the gain from transmit antenna i to receive
/// antenna j on multipath component l. Immutable once built.
struct ChannelTaps {
  int n_t = 0;
  int n_r = 0;
  int L = 0;
  std::vector<Eigen::MatrixXcd> taps;
};

struct FrameParams {
  int K = 1;        // data channel uses per frame
  int cp_len = 0;   // cyclic prefix length, L-1
  Modulation mod = Modulation::bpsk();
};

/// The flattened frequency-domain linear model r = H x + v that every
/// detector consumes. H is Kn_r x Kn_t, sigma2 is the per-entry complex
/// noise variance n_t*L*E_s/gamma.
struct EffectiveModel {
  Eigen::MatrixXcd H;
  Eigen::VectorXcd r;
  double sigma2 = 0.0;
  int K = 1;
  int n_t = 1;
  int n_r = 1;
};

/// i.i.d. CN(0,1) taps (real/imag parts each variance 1/2), constant for one frame.
inline ChannelTaps generate_channel(int n_t, int n_r, int L, std::mt19937_64& rng) {
  if (n_t < 1 || n_r < 1 || L < 1) throw std::invalid_argument("generate_channel: dimensions must be >= 1");
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  ChannelTaps ct{n_t, n_r, L, {}};
  ct.taps.reserve(L);
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXcd H(n_r, n_t);
    for (int j = 0; j < n_r; ++j)
      for (int i = 0; i < n_t; ++i) H(j, i) = cplx(g(rng), g(rng));
    ct.taps.push_back(std::move(H));
  }
  return ct;
}

/// Per-frequency blocks G_i = sum_l e^{-2*pi*j*l*i/K} H_l, i = 0..K-1.
inline std::vector<Eigen::MatrixXcd> build_frequency_blocks(const ChannelTaps& taps, int K) {
  if (K < taps.L) throw std::invalid_argument("build_frequency_blocks: K must be >= L");
  std::vector<Eigen::MatrixXcd> blocks(K);
  for (int i = 0; i < K; ++i) {
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(taps.n_r, taps.n_t);
    for (int l = 0; l < taps.L; ++l) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(l) * i / K;
      G += cplx(std::cos(ang), std::sin(ang)) * taps.taps[l];
    }
    blocks[i] = std::move(G);
  }
  return blocks;
}

/// H_eff = G*F with G = blockdiag(G_i) and F = (1/sqrt(K)) D_K (x) I_{n_t}.
/// Block (i,q) is (1/sqrt(K)) e^{-2*pi*j*q*i/K} G_i, so the fill is O((Kn_t)^2).
inline Eigen::MatrixXcd build_effective_matrix(const std::vector<Eigen::MatrixXcd>& blocks, int K, int n_t) {
  if (static_cast<int>(blocks.size()) != K) throw std::runtime_error("build_effective_matrix: block count != K");
  const int n_r = static_cast<int>(blocks[0].rows());
  if (blocks[0].cols() != n_t) throw std::runtime_error("build_effective_matrix: block width != n_t");
  Eigen::MatrixXcd H(K * n_r, K * n_t);
  const double s = 1.0 / std::sqrt(static_cast<double>(K));
  for (int i = 0; i < K; ++i) {
    for (int q = 0; q < K; ++q) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(q) * i / K;
      H.block(i * n_r, q * n_t, n_r, n_t) = (s * cplx(std::cos(ang), std::sin(ang))) * blocks[i];
    }
  }
  return H;
}

/// Noiseless time-domain receive sequence y_q = sum_l H_l x_{q-l}, q = 0..K-1.
/// Cyclic indexing by default; cp_explicit materializes the CP samples and
/// runs the linear convolution instead (the two must agree).
inline std::vector<Eigen::VectorXcd> time_domain_receive(const ChannelTaps& taps, int K,
                                                         const Eigen::VectorXcd& x_time,
                                                         bool cp_explicit = false) {
  const int n_t = taps.n_t;
  if (x_time.size() != static_cast<Eigen::Index>(K) * n_t)
    throw std::invalid_argument("time_domain_receive: x size != K*n_t");
  auto x_at = [&](int q) { return x_time.segment(q * n_t, n_t); };
  std::vector<Eigen::VectorXcd> y(K);
  if (!cp_explicit) {
    for (int q = 0; q < K; ++q) {
      Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(taps.n_r);
      for (int l = 0; l < taps.L; ++l) acc += taps.taps[l] * x_at(((q - l) % K + K) % K);
      y[q] = std::move(acc);
    }
  } else {
    // prepend the last L-1 vectors as CP, convolve linearly, keep the K data slots
    const int cp = taps.L - 1;
    std::vector<Eigen::VectorXcd> ext(K + cp);
    for (int q = 0; q < cp; ++q) ext[q] = x_at(K - cp + q);
    for (int q = 0; q < K; ++q) ext[cp + q] = x_at(q);
    for (int q = 0; q < K; ++q) {
      Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(taps.n_r);
      for (int l = 0; l < taps.L; ++l) {
        const int src = cp + q - l;
        if (src >= 0) acc += taps.taps[l] * ext[src];
      }
      y[q] = std::move(acc);
    }
  }
  return y;
}

/// Per-antenna unitary K-point DFT of a sequence of n-vectors; returns the
/// stacked frequency-domain vector [s_0; ...; s_{K-1}].
inline Eigen::VectorXcd stacked_dft(const std::vector<Eigen::VectorXcd>& seq) {
  const int K = static_cast<int>(seq.size());
  const int n = static_cast<int>(seq[0].size());
  Eigen::VectorXcd out(K * n);
  Eigen::VectorXcd tmp(K);
  for (int a = 0; a < n; ++a) {
    for (int q = 0; q < K; ++q) tmp[q] = seq[q][a];
    Eigen::VectorXcd f = unitary_dft(tmp);
    for (int i = 0; i < K; ++i) out[i * n + a] = f[i];
  }
  return out;
}

inline double snr_db_to_sigma2(double snr_db, int n_t, int L) {
  if (std::isinf(snr_db)) return 0.0;
  const double gamma = std::pow(10.0, snr_db / 10.0);
  return static_cast<double>(n_t) * L / gamma;  // E_s = 1
}

/// Time-domain CP transmission of one frame plus AWGN, transformed to the
/// frequency domain, packaged with H_eff and sigma2. Infinite snr_db disables
/// the noise (sigma2 = 0).
inline EffectiveModel simulate_frame(const ChannelTaps& taps, const FrameParams& params,
                                     const Eigen::VectorXcd& x, double snr_db, std::mt19937_64& rng) {
  const int K = params.K;
  if (K < taps.L) throw std::invalid_argument("simulate_frame: K must be >= L");
  const double sigma2 = snr_db_to_sigma2(snr_db, taps.n_t, taps.L);
  auto y = time_domain_receive(taps, K, x);
  if (sigma2 > 0.0) {
    std::normal_distribution<double> g(0.0, std::sqrt(sigma2 / 2.0));
    for (auto& yq : y)
      for (Eigen::Index j = 0; j < yq.size(); ++j) yq[j] += cplx(g(rng), g(rng));
  }
  EffectiveModel m;
  m.r = stacked_dft(y);
  m.H = build_effective_matrix(build_frequency_blocks(taps, K), K, taps.n_t);
  m.sigma2 = sigma2;
  m.K = K;
  m.n_t = taps.n_t;
  m.n_r = taps.n_r;
  return m;
}

}  // namespace gmdet
