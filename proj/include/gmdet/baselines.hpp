#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "gmdet/channel.hpp"
#include "gmdet/dft.hpp"

namespace gmdet {

/// Per-frequency MMSE equalizer for the CPSC model: u_i = (G_i^H G_i +
/// sigma2 I)^-1 G_i^H r_i, followed by the per-antenna inverse unitary DFT.
/// Returns the time-domain soft symbol estimates (length K*n_t).
inline Eigen::VectorXcd fd_mmse_equalize(const std::vector<Eigen::MatrixXcd>& blocks,
                                         const Eigen::VectorXcd& r_freq, double sigma2) {
  const int K = static_cast<int>(blocks.size());
  const int n_r = static_cast<int>(blocks[0].rows());
  const int n_t = static_cast<int>(blocks[0].cols());
  if (r_freq.size() != static_cast<Eigen::Index>(K) * n_r)
    throw std::invalid_argument("fd_mmse_equalize: r size != K*n_r");
  std::vector<Eigen::VectorXcd> u(K);
  for (int i = 0; i < K; ++i) {
    const Eigen::MatrixXcd& G = blocks[i];
    Eigen::MatrixXcd A = G.adjoint() * G + sigma2 * Eigen::MatrixXcd::Identity(n_t, n_t);
    u[i] = A.ldlt().solve(G.adjoint() * r_freq.segment(i * n_r, n_r));
  }
  // inverse DFT per antenna back to the time domain
  Eigen::VectorXcd x(K * n_t);
  Eigen::VectorXcd tmp(K);
  for (int a = 0; a < n_t; ++a) {
    for (int i = 0; i < K; ++i) tmp[i] = u[i][a];
    Eigen::VectorXcd t = unitary_dft(tmp, /*inverse=*/true);
    for (int q = 0; q < K; ++q) x[q * n_t + a] = t[q];
  }
  return x;
}

/// Full-matrix MMSE on the effective model, (H^H H + sigma2 I)^-1 H^H r.
/// Equals the per-frequency solution; kept as the generic route.
inline Eigen::VectorXcd mmse_equalize(const EffectiveModel& m) {
  const Eigen::Index n = m.H.cols();
  Eigen::MatrixXcd A = m.H.adjoint() * m.H + m.sigma2 * Eigen::MatrixXcd::Identity(n, n);
  return A.ldlt().solve(m.H.adjoint() * m.r);
}

struct OracleResult {
  Eigen::MatrixXd marginals;     // n x |alphabet|, exact posteriors
  Eigen::VectorXcd map_decision; // per-variable argmax of the marginal
  Eigen::VectorXcd ml_decision;  // joint min-residual vector
  double ml_cost = 0.0;
};

/// Exact posterior marginals, MAP and ML decisions by enumeration with the
/// Gaussian likelihood exp(-||r - Hx||^2 / (2 sigma2)), log-sum-exp
/// stabilized. Guarded to |alphabet|^n <= 2^20 hypotheses.
inline OracleResult map_oracle(const EffectiveModel& model, const std::vector<cplx>& alphabet) {
  const int n = static_cast<int>(model.H.cols());
  const int A = static_cast<int>(alphabet.size());
  if (model.sigma2 <= 0.0) throw std::invalid_argument("map_oracle: sigma2 must be > 0");
  double hyp = std::pow(static_cast<double>(A), n);
  if (hyp > static_cast<double>(1 << 20))
    throw std::runtime_error("map_oracle: instance too large (" + std::to_string(static_cast<long long>(hyp)) +
                             " hypotheses exceeds 2^20 guard)");

  std::vector<int> idx(n, 0);
  Eigen::VectorXcd hx = Eigen::VectorXcd::Zero(model.H.rows());
  for (int i = 0; i < n; ++i) hx += model.H.col(i) * alphabet[0];

  // running log-sum-exp per (variable, letter): lmax + sum of shifted exps
  Eigen::MatrixXd lmax = Eigen::MatrixXd::Constant(n, A, -std::numeric_limits<double>::infinity());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, A);

  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<int> best_idx = idx;

  for (;;) {
    const double cost = (model.r - hx).squaredNorm();
    const double lw = -cost / (2.0 * model.sigma2);
    for (int i = 0; i < n; ++i) {
      const int a = idx[i];
      if (lw > lmax(i, a)) {
        acc(i, a) = acc(i, a) * std::exp(lmax(i, a) - lw) + 1.0;
        lmax(i, a) = lw;
      } else {
        acc(i, a) += std::exp(lw - lmax(i, a));
      }
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_idx = idx;
    }
    // odometer increment with incremental H*x update
    int d = 0;
    while (d < n) {
      const int old = idx[d];
      idx[d] = (idx[d] + 1) % A;
      hx += model.H.col(d) * (alphabet[idx[d]] - alphabet[old]);
      if (idx[d] != 0) break;
      ++d;
    }
    if (d == n) break;
  }

  OracleResult res;
  res.marginals.resize(n, A);
  res.map_decision.resize(n);
  res.ml_decision.resize(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd row(A);
    for (int a = 0; a < A; ++a) row[a] = lmax(i, a) + std::log(acc(i, a));
    const double m = row.maxCoeff();
    Eigen::VectorXd p = (row.array() - m).exp();
    p /= p.sum();
    res.marginals.row(i) = p.transpose();
    int arg = 0;
    p.maxCoeff(&arg);
    res.map_decision[i] = alphabet[arg];
    res.ml_decision[i] = alphabet[best_idx[i]];
  }
  res.ml_cost = best_cost;
  return res;
}

/// Joint minimum-residual vector over the alphabet (same enumeration guard).
inline Eigen::VectorXcd ml_oracle(const EffectiveModel& model, const std::vector<cplx>& alphabet) {
  const int n = static_cast<int>(model.H.cols());
  const int A = static_cast<int>(alphabet.size());
  double hyp = std::pow(static_cast<double>(A), n);
  if (hyp > static_cast<double>(1 << 20)) throw std::runtime_error("ml_oracle: instance too large");
  std::vector<int> idx(n, 0);
  Eigen::VectorXcd hx = Eigen::VectorXcd::Zero(model.H.rows());
  for (int i = 0; i < n; ++i) hx += model.H.col(i) * alphabet[0];
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_idx = idx;
  for (;;) {
    const double cost = (model.r - hx).squaredNorm();
    if (cost < best) {
      best = cost;
      best_idx = idx;
    }
    int d = 0;
    while (d < n) {
      const int old = idx[d];
      idx[d] = (idx[d] + 1) % A;
      hx += model.H.col(d) * (alphabet[idx[d]] - alphabet[old]);
      if (idx[d] != 0) break;
      ++d;
    }
    if (d == n) break;
  }
  Eigen::VectorXcd out(n);
  for (int i = 0; i < n; ++i) out[i] = alphabet[best_idx[i]];
  return out;
}

/// BPSK BER on the unfaded SISO AWGN channel, Q(sqrt(2*gamma)).
inline double siso_awgn_ber(double snr_db) {
  const double gamma = std::pow(10.0, snr_db / 10.0);
  return 0.5 * std::erfc(std::sqrt(gamma));
}

}  // namespace gmdet
