#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "gmdet/baselines.hpp"
#include "gmdet/channel.hpp"
#include "gmdet/fg_gai_bp.hpp"
#include "gmdet/modulation.hpp"

namespace gmdet {

/// Real-valued stacked model r' = H'x' + v'. For QAM, H' is the 2Kn_r x 2Kn_t
/// block matrix [[Re,-Im],[Im,Re]] and each x' entry is scale * {+-1,+-3,...}.
/// For BPSK the imaginary unknowns vanish, so H' = [Re;Im] with Kn_t columns.
/// sigma2 is the complex-model per-entry variance; residual norms are
/// preserved, so the same value is used in all search costs.
struct RealModel {
  Eigen::MatrixXd H;
  Eigen::VectorXd r;
  std::vector<double> pam;  // normalized PAM values, ascending
  double scale = 1.0;       // pam = scale * {-(M'-1), ..., +(M'-1)}
  int layers = 1;           // N = log2(M')
  double sigma2 = 0.0;
  int n_complex = 0;        // Kn_t

  int n() const { return static_cast<int>(H.cols()); }
};

inline RealModel realify(const EffectiveModel& model, const Modulation& mod) {
  RealModel rm;
  const Eigen::Index nr = model.H.rows(), nt = model.H.cols();
  rm.sigma2 = model.sigma2;
  rm.n_complex = static_cast<int>(nt);
  rm.scale = mod.scale();
  rm.layers = mod.layers();
  rm.pam = mod.pam_points();
  if (!mod.is_qam()) {
    rm.H.resize(2 * nr, nt);
    rm.H << model.H.real(), model.H.imag();
    rm.r.resize(2 * nr);
    rm.r << model.r.real(), model.r.imag();
    return rm;
  }
  rm.H.resize(2 * nr, 2 * nt);
  rm.H << model.H.real(), -model.H.imag(), model.H.imag(), model.H.real();
  rm.r.resize(2 * nr);
  rm.r << model.r.real(), model.r.imag();
  return rm;
}

/// Recombine a real PAM decision vector into complex symbols.
inline Eigen::VectorXcd complexify(const RealModel& rm, const Eigen::VectorXd& x) {
  Eigen::VectorXcd out(rm.n_complex);
  const bool has_imag = rm.n() == 2 * rm.n_complex;
  for (int i = 0; i < rm.n_complex; ++i)
    out[i] = cplx(x[i], has_imag ? x[rm.n_complex + i] : 0.0);
  return out;
}

struct RtsConfig {
  int max_iterations = 300;
  int initial_tabu_period = 3;
  int repeat_window = 50;        // revisit within this many iterations triggers escalation
  double escalation = 1.5;       // tabu period multiplier on repetition
  bool full_neighborhood = false;  // substitute any alphabet value, not just nearest
};

struct RtsResult {
  Eigen::VectorXd x;   // best visited vector, on the PAM lattice
  double cost = 0.0;   // ||r' - H'x||^2 at the best vector
  int iterations = 0;
};

namespace detail {

inline std::uint64_t hash_indices(const std::vector<int>& idx) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int v : idx) {
    h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Reactive tabu search over the PAM lattice minimizing ||r' - H'x||^2.
/// Moves are single-coordinate substitutions to nearest PAM neighbors
/// (full-alphabet when configured). Move costs are evaluated incrementally
/// from the gradient vector g = H'^T H' x, O(1) per candidate.
inline RtsResult rts_detect(const RealModel& rm, const RtsConfig& cfg, const Eigen::VectorXd& initial) {
  const int n = rm.n();
  const int A = static_cast<int>(rm.pam.size());
  Eigen::MatrixXd Fm = rm.H.transpose() * rm.H;
  Eigen::VectorXd p = rm.H.transpose() * rm.r;

  std::vector<int> idx(n);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) {
    // snap the initial vector onto the lattice
    int best = 0;
    for (int a = 1; a < A; ++a)
      if (std::abs(initial[i] - rm.pam[a]) < std::abs(initial[i] - rm.pam[best])) best = a;
    idx[i] = best;
    x[i] = rm.pam[best];
  }
  Eigen::VectorXd g = Fm * x;
  double cost = (rm.r - rm.H * x).squaredNorm();

  Eigen::VectorXd best_x = x;
  double best_cost = cost;

  Eigen::MatrixXi tabu_until = Eigen::MatrixXi::Constant(n, A, -1);
  int tabu_period = cfg.initial_tabu_period;
  std::unordered_map<std::uint64_t, int> last_seen;
  last_seen[detail::hash_indices(idx)] = 0;

  int it = 1;
  for (; it <= cfg.max_iterations; ++it) {
    int mi = -1, ma = -1;
    double mdelta = std::numeric_limits<double>::infinity();
    int fallback_i = -1, fallback_a = -1, fallback_expiry = std::numeric_limits<int>::max();
    double fallback_delta = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const int lo = cfg.full_neighborhood ? 0 : std::max(0, idx[i] - 1);
      const int hi = cfg.full_neighborhood ? A - 1 : std::min(A - 1, idx[i] + 1);
      for (int a = lo; a <= hi; ++a) {
        if (a == idx[i]) continue;
        const double dlt = rm.pam[a] - x[i];
        const double delta = dlt * dlt * Fm(i, i) + 2.0 * dlt * (g[i] - p[i]);
        const bool tabu = tabu_until(i, a) >= it;
        const bool aspirates = cost + delta < best_cost;
        if (!tabu || aspirates) {
          if (delta < mdelta) {
            mdelta = delta;
            mi = i;
            ma = a;
          }
        } else if (tabu_until(i, a) < fallback_expiry ||
                   (tabu_until(i, a) == fallback_expiry && delta < fallback_delta)) {
          fallback_expiry = tabu_until(i, a);
          fallback_delta = delta;
          fallback_i = i;
          fallback_a = a;
        }
      }
    }
    if (mi < 0) {  // everything tabu: take the move closest to expiry
      mi = fallback_i;
      ma = fallback_a;
      mdelta = fallback_delta;
      if (mi < 0) break;
    }
    const int old_a = idx[mi];
    const double dlt = rm.pam[ma] - x[mi];
    g += dlt * Fm.col(mi);
    cost += mdelta;
    idx[mi] = ma;
    x[mi] = rm.pam[ma];
    tabu_until(mi, old_a) = it + tabu_period;  // prohibit the reverse move

    if (cost < best_cost - 1e-12) {
      best_cost = cost;
      best_x = x;
    }
    // reactive tabu-period adaptation on solution repetitions
    const std::uint64_t h = detail::hash_indices(idx);
    auto [pos, inserted] = last_seen.try_emplace(h, it);
    if (!inserted) {
      if (it - pos->second <= cfg.repeat_window)
        tabu_period = static_cast<int>(std::ceil(tabu_period * cfg.escalation));
      pos->second = it;
    } else {
      tabu_period = std::max(cfg.initial_tabu_period, tabu_period - 1);
    }
  }
  return {best_x, best_cost, it - 1};
}

struct HybridConfig {
  RtsConfig rts;
  FgConfig fg;           // BP run on the LSB layer
  int loops = 2;         // RTS <-> BP rounds
};

struct HybridResult {
  Eigen::VectorXd x_real;     // final decision on the PAM lattice
  Eigen::VectorXcd x;         // complex symbol decisions
  double cost = 0.0;          // ML cost of the returned vector
  double m1 = 0.0;            // residual norm of the first RTS output
  bool bp_ran = false;
};

namespace detail {

inline Eigen::VectorXd mmse_initial(const EffectiveModel& model, const RealModel& rm) {
  Eigen::VectorXcd soft = mmse_equalize(model);
  Eigen::VectorXd init(rm.n());
  for (int i = 0; i < rm.n_complex; ++i) init[i] = soft[i].real();
  if (rm.n() == 2 * rm.n_complex)
    for (int i = 0; i < rm.n_complex; ++i) init[rm.n_complex + i] = soft[i].imag();
  return init;
}

/// Shared implementation of the hybrid RTS-BP loop. When gate_theta is set,
/// the BP stage (steps 2-4) runs only if the first RTS residual norm
/// M1 = ||r' - H'x|| exceeds it.
inline HybridResult hybrid_impl(const EffectiveModel& model, const Modulation& mod,
                                const HybridConfig& cfg, std::optional<double> gate_theta) {
  RealModel rm = realify(model, mod);
  const int n = rm.n();
  RtsResult rts = rts_detect(rm, cfg.rts, mmse_initial(model, rm));

  HybridResult out;
  out.m1 = std::sqrt(rts.cost);
  Eigen::VectorXd best = rts.x;
  double best_cost = rts.cost;
  if (gate_theta && !(out.m1 > *gate_theta)) {
    out.x_real = best;
    out.x = complexify(rm, best);
    out.cost = best_cost;
    return out;
  }
  out.bp_ran = true;

  const int N = rm.layers;
  Eigen::VectorXd cur = rts.x;
  for (int loop = 0; loop < cfg.loops; ++loop) {
    // step 2: expand into +-1 layers and cancel everything above the LSB
    Eigen::MatrixXd b(n, N);
    for (int i = 0; i < n; ++i) {
      auto bits = bit_expand(static_cast<int>(std::lround(cur[i] / rm.scale)), N);
      for (int j = 0; j < N; ++j) b(i, j) = bits[j];
    }
    Eigen::VectorXd upper = Eigen::VectorXd::Zero(n);
    for (int j = 1; j < N; ++j) upper += (1 << j) * b.col(j);
    Eigen::VectorXd r_tilde = rm.r - rm.H * (rm.scale * upper);
    // step 3: BP over the +-1 LSB layer (effective gain scale * H')
    FgResult fg = detect_fg_real(rm.scale * rm.H, r_tilde, rm.sigma2 / 2.0, cfg.fg);
    Eigen::VectorXd recombined(n);
    for (int i = 0; i < n; ++i) recombined[i] = rm.scale * (fg.decisions[i] + upper[i]);
    const double rc = (rm.r - rm.H * recombined).squaredNorm();
    if (rc < best_cost) {
      best_cost = rc;
      best = recombined;
    }
    // step 4: restart RTS from the recombined vector
    RtsResult again = rts_detect(rm, cfg.rts, recombined);
    if (again.cost < best_cost) {
      best_cost = again.cost;
      best = again.x;
    }
    cur = again.x;
  }
  out.x_real = best;
  out.x = complexify(rm, best);
  out.cost = best_cost;
  return out;
}

}  // namespace detail

/// Unconditional hybrid RTS-BP detection of M-QAM (or BPSK, where the
/// interference-cancellation sum is empty and BP refines the whole vector).
inline HybridResult hybrid_detect(const EffectiveModel& model, const Modulation& mod,
                                  const HybridConfig& cfg) {
  return detail::hybrid_impl(model, mod, cfg, std::nullopt);
}

/// Selective variant: BP runs only when the RTS residual norm M1 exceeds
/// theta. theta = inf degenerates to plain RTS, theta = 0 to the
/// unconditional hybrid.
inline HybridResult selective_hybrid_detect(const EffectiveModel& model, const Modulation& mod,
                                            const HybridConfig& cfg, double theta) {
  if (theta < 0.0) throw std::invalid_argument("selective_hybrid_detect: theta must be >= 0");
  return detail::hybrid_impl(model, mod, cfg, theta);
}

/// Plain RTS detection from the quantized MMSE initial vector.
inline HybridResult rts_only_detect(const EffectiveModel& model, const Modulation& mod,
                                    const RtsConfig& cfg) {
  HybridConfig hc;
  hc.rts = cfg;
  return detail::hybrid_impl(model, mod, hc, std::numeric_limits<double>::infinity());
}

}  // namespace gmdet
