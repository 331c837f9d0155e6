#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gmdet/channel.hpp"

namespace gmdet {

/// Pairwise MRF potentials of the detection problem, kept in log domain.
/// z = H^H r / sigma2, R = H^H H / sigma2; the edge potential is
/// log psi_{i,j}(a,b) = -a * Re{R_ij} * b and the self potential is
/// log phi_i(a) = a * Re{z_i} + log prior, a,b in {+-1}.
struct MrfPotentials {
  Eigen::VectorXcd z;
  Eigen::MatrixXd coupling;       // Re{R}, Hermitian so real symmetric
  Eigen::VectorXd log_prior_gap;  // ln p(+1) - ln p(-1) per variable (0 = uniform)

  int size() const { return static_cast<int>(coupling.rows()); }
  double log_phi(int i, int a) const {
    return a * z[i].real() + 0.5 * a * log_prior_gap[i];
  }
  double log_psi(int i, int j, int a, int b) const { return -a * coupling(i, j) * b; }
};

struct DampingConfig {
  double alpha_m = 0.0;  // message damping factor, [0,1)
  double alpha_b = 0.0;  // belief damping factor, [0,1)
};

struct MrfConfig {
  int num_iter = 10;  // 5 for flat fading, 10 for ISI channels
  DampingConfig damping;
};

/// Per-variable beliefs and per-ordered-edge messages, all stored as the
/// probability of +1 of a normalized binary distribution.
struct MrfState {
  Eigen::MatrixXd msg;      // msg(i,j) = m_{i,j}(x_j = +1), diagonal unused
  Eigen::VectorXd belief;   // belief(i) = b_i(x_i = +1)
  int iteration = 0;

  static MrfState init(int n) {
    MrfState s;
    s.msg = Eigen::MatrixXd::Constant(n, n, 0.5);
    s.belief = Eigen::VectorXd::Constant(n, 0.5);
    return s;
  }
};

inline MrfPotentials compute_potentials(const EffectiveModel& model,
                                        const Eigen::VectorXd* log_prior_gap = nullptr) {
  if (model.sigma2 <= 0.0) throw std::invalid_argument("compute_potentials: sigma2 must be > 0");
  MrfPotentials pot;
  pot.z = (model.H.adjoint() * model.r) / model.sigma2;
  pot.coupling = ((model.H.adjoint() * model.H) / model.sigma2).real();
  pot.log_prior_gap = log_prior_gap ? *log_prior_gap : Eigen::VectorXd::Zero(model.H.cols());
  return pot;
}

/// Potentials for a real-valued stacked model r' = H'x' + v' using the same
/// exp(-||.||^2 / (2 sigma2)) convention, so residuals match the complex model.
inline MrfPotentials compute_potentials_real(const Eigen::MatrixXd& H, const Eigen::VectorXd& r,
                                             double sigma2) {
  if (sigma2 <= 0.0) throw std::invalid_argument("compute_potentials_real: sigma2 must be > 0");
  MrfPotentials pot;
  Eigen::VectorXd z = (H.transpose() * r) / sigma2;
  pot.z = z.cast<cplx>();
  pot.coupling = (H.transpose() * H) / sigma2;
  pot.log_prior_gap = Eigen::VectorXd::Zero(H.cols());
  return pot;
}

namespace detail {
inline double safe_log(double p) { return std::log(std::max(p, 1e-300)); }
inline double logaddexp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (!std::isfinite(a)) return a;
  // the tail is below double resolution and exp() would go denormal
  if (b - a < -40.0) return a;
  return a + std::log1p(std::exp(b - a));
}
}  // namespace detail

/// One flooding round per Table-style parallel schedule: tentative messages
/// from the previous round's messages, convex-blended with alpha_m, then
/// tentative beliefs blended with alpha_b. Everything renormalized.
inline void mrf_iteration(const MrfPotentials& pot, MrfState& state, const DampingConfig& damping) {
  const int n = pot.size();
  Eigen::MatrixXd logp(n, n), logm(n, n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      logp(k, i) = detail::safe_log(state.msg(k, i));
      logm(k, i) = detail::safe_log(1.0 - state.msg(k, i));
    }
  // column sums over senders: S_i(x_i) = log phi_i(x_i) + sum_k log m_{k,i}(x_i)
  Eigen::VectorXd sp(n), sm(n);
  for (int i = 0; i < n; ++i) {
    double ap = 0.0, am = 0.0;
    for (int k = 0; k < n; ++k)
      if (k != i) {
        ap += logp(k, i);
        am += logm(k, i);
      }
    sp[i] = pot.log_phi(i, +1) + ap;
    sm[i] = pot.log_phi(i, -1) + am;
  }

  Eigen::MatrixXd new_msg(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) {
        new_msg(i, j) = 0.5;
        continue;
      }
      const double lp = sp[i] - logp(j, i);  // exclude j's incoming message
      const double lm = sm[i] - logm(j, i);
      const double w = pot.coupling(i, j);
      // log m~(x_j=+1) = logaddexp(lp + psi(+1,+1), lm + psi(-1,+1))
      const double ltp = detail::logaddexp(lp - w, lm + w);
      const double ltm = detail::logaddexp(lp + w, lm - w);
      double mt = 1.0 / (1.0 + std::exp(ltm - ltp));
      mt = damping.alpha_m * state.msg(i, j) + (1.0 - damping.alpha_m) * mt;
      new_msg(i, j) = mt;
    }
  }
  state.msg.swap(new_msg);

  for (int i = 0; i < n; ++i) {
    double ap = pot.log_phi(i, +1), am = pot.log_phi(i, -1);
    for (int j = 0; j < n; ++j)
      if (j != i) {
        ap += detail::safe_log(state.msg(j, i));
        am += detail::safe_log(1.0 - state.msg(j, i));
      }
    const double c = std::max(ap, am);
    const double bp = std::exp(ap - c), bm = std::exp(am - c);
    double bt = bp / (bp + bm);
    bt = damping.alpha_b * state.belief[i] + (1.0 - damping.alpha_b) * bt;
    state.belief[i] = bt;
  }
  ++state.iteration;
}

struct MrfResult {
  Eigen::VectorXi decisions;  // +-1
  Eigen::VectorXd beliefs;    // final P(x_i = +1)
};

inline Eigen::VectorXi decisions_from_beliefs(const Eigen::VectorXd& b) {
  Eigen::VectorXi d(b.size());
  for (Eigen::Index i = 0; i < b.size(); ++i) d[i] = (b[i] >= 0.5) ? +1 : -1;  // tie -> +1
  return d;
}

inline MrfResult detect_mrf_potentials(const MrfPotentials& pot, const MrfConfig& cfg) {
  MrfState state = MrfState::init(pot.size());
  for (int t = 0; t < cfg.num_iter; ++t) mrf_iteration(pot, state, cfg.damping);
  return {decisions_from_beliefs(state.belief), state.belief};
}

/// MRF BP detection on a BPSK effective model. 4-QAM is handled upstream via
/// the realified model (see qam_search.hpp).
inline MrfResult detect_mrf(const EffectiveModel& model, const MrfConfig& cfg) {
  return detect_mrf_potentials(compute_potentials(model), cfg);
}

/// Decisions after every iteration count 0..num_iter; row 0 is the
/// message-free argmax of phi (matched-filter decisions).
inline std::vector<Eigen::VectorXi> detect_mrf_trace(const MrfPotentials& pot, const MrfConfig& cfg) {
  MrfState state = MrfState::init(pot.size());
  std::vector<Eigen::VectorXi> out;
  out.reserve(cfg.num_iter + 1);
  Eigen::VectorXi d0(pot.size());
  for (int i = 0; i < pot.size(); ++i) d0[i] = (pot.log_phi(i, +1) >= pot.log_phi(i, -1)) ? +1 : -1;
  out.push_back(d0);
  for (int t = 0; t < cfg.num_iter; ++t) {
    mrf_iteration(pot, state, cfg.damping);
    out.push_back(decisions_from_beliefs(state.belief));
  }
  return out;
}

}  // namespace gmdet
