#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gmdet/channel.hpp"

namespace gmdet {

struct FgConfig {
  int num_iter = 10;     // 10 for ISI channels, 20 for flat fading
  double alpha_m = 0.4;  // probability damping factor
};

/// Per-(observation, variable) messages of the factor graph: LLRs from
/// observation nodes and extrinsic +1 probabilities from variable nodes.
struct FgState {
  Eigen::MatrixXd llr;       // llr(i,k), observation i -> variable k
  Eigen::MatrixXd ext_prob;  // ext_prob(i,k) = p_i^{k+}
  int iteration = 0;

  static FgState init(int n_obs, int n_var) {
    FgState s;
    s.llr = Eigen::MatrixXd::Zero(n_obs, n_var);
    s.ext_prob = Eigen::MatrixXd::Constant(n_obs, n_var, 0.5);
    return s;
  }
};

struct FgResult {
  Eigen::VectorXi decisions;  // +-1
  Eigen::VectorXd total_llr;  // sum_i llr(i,k)
};

namespace detail {

inline double logistic(double x) {
  // saturate beyond double precision; also keeps exp() out of the denormal
  // range, which costs ~100x on x86
  if (x > 40.0) return 1.0;
  if (x < -40.0) return 0.0;
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Gaussian-interference LLR update. llr_gain is 4 for the complex model
/// (per-entry complex noise variance sigma2) and 2 for a real model (per-entry
/// real variance sigma2). Uses the full-sum-minus-one-term form, O(nm) total.
template <typename Mat, typename Vec>
void fg_llr_update(const Mat& H, const Eigen::MatrixXd& absH2, const Vec& r, double sigma2,
                   double llr_gain, FgState& s) {
  using Scalar = typename Mat::Scalar;
  const int n_obs = static_cast<int>(H.rows());
  const int n_var = static_cast<int>(H.cols());
  // full-sum interference statistics per observation, column-order traversal
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mu_full =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n_obs);
  Eigen::VectorXd var_full = Eigen::VectorXd::Zero(n_obs);
  for (int j = 0; j < n_var; ++j)
    for (int i = 0; i < n_obs; ++i) {
      const double e = 2.0 * s.ext_prob(i, j) - 1.0;
      mu_full[i] += H(i, j) * e;
      var_full[i] += absH2(i, j) * (1.0 - e * e);
    }
  for (int k = 0; k < n_var; ++k) {
    for (int i = 0; i < n_obs; ++i) {
      const double e = 2.0 * s.ext_prob(i, k) - 1.0;
      const Scalar mu = mu_full[i] - H(i, k) * e;
      double var = var_full[i] - absH2(i, k) * (1.0 - e * e) + sigma2;
      var = std::max(var, sigma2);  // noise floor
      const Scalar resid = r[i] - mu;
      double corr;
      if constexpr (std::is_same_v<Scalar, double>)
        corr = H(i, k) * resid;
      else
        corr = (std::conj(H(i, k)) * resid).real();
      s.llr(i, k) = (llr_gain / var) * corr;
    }
  }
}

/// Extrinsic probability update p_i^{k+} = logistic(sum_{l != i} llr(l,k)),
/// blended with the previous round when alpha_m > 0.
inline void fg_prob_update(FgState& s, double alpha_m) {
  const int n_obs = static_cast<int>(s.llr.rows());
  const int n_var = static_cast<int>(s.llr.cols());
  Eigen::VectorXd colsum = s.llr.colwise().sum();
  for (int k = 0; k < n_var; ++k)
    for (int i = 0; i < n_obs; ++i) {
      const double p = logistic(colsum[k] - s.llr(i, k));
      s.ext_prob(i, k) = alpha_m * s.ext_prob(i, k) + (1.0 - alpha_m) * p;
    }
  ++s.iteration;
}

template <typename Mat, typename Vec>
std::vector<Eigen::VectorXi> fg_detect_trace(const Mat& H, const Vec& r, double sigma2,
                                             double llr_gain, const FgConfig& cfg,
                                             Eigen::VectorXd* final_llr = nullptr) {
  if (sigma2 <= 0.0) throw std::invalid_argument("fg detect: sigma2 must be > 0");
  const int n_obs = static_cast<int>(H.rows());
  const int n_var = static_cast<int>(H.cols());
  Eigen::MatrixXd absH2(n_obs, n_var);
  for (int i = 0; i < n_obs; ++i)
    for (int k = 0; k < n_var; ++k) {
      if constexpr (std::is_same_v<typename Mat::Scalar, double>)
        absH2(i, k) = H(i, k) * H(i, k);
      else
        absH2(i, k) = std::norm(H(i, k));
    }
  FgState s = FgState::init(n_obs, n_var);
  std::vector<Eigen::VectorXi> trace;
  trace.reserve(cfg.num_iter);
  for (int t = 0; t < cfg.num_iter; ++t) {
    fg_llr_update(H, absH2, r, sigma2, llr_gain, s);
    Eigen::VectorXd tot = s.llr.colwise().sum();
    Eigen::VectorXi d(n_var);
    for (int k = 0; k < n_var; ++k) d[k] = (tot[k] >= 0.0) ? +1 : -1;  // tie -> +1
    trace.push_back(std::move(d));
    if (t + 1 < cfg.num_iter) fg_prob_update(s, cfg.alpha_m);
    if (final_llr && t + 1 == cfg.num_iter) *final_llr = s.llr.colwise().sum();
  }
  return trace;
}

}  // namespace detail

/// FG-GAI BP detection of BPSK on the complex effective model.
inline FgResult detect_fg(const EffectiveModel& model, const FgConfig& cfg) {
  Eigen::VectorXd tot;
  auto trace = detail::fg_detect_trace(model.H, model.r, model.sigma2, 4.0, cfg, &tot);
  return {trace.back(), tot};
}

/// FG-GAI BP on a real-valued model (entries of v real N(0, sigma2_real)),
/// as used on the LSB layer inside the hybrid RTS-BP loop.
inline FgResult detect_fg_real(const Eigen::MatrixXd& H, const Eigen::VectorXd& r, double sigma2_real,
                               const FgConfig& cfg) {
  Eigen::VectorXd tot;
  auto trace = detail::fg_detect_trace(H, r, sigma2_real, 2.0, cfg, &tot);
  return {trace.back(), tot};
}

/// Decisions after each iteration 1..num_iter (for convergence traces).
inline std::vector<Eigen::VectorXi> detect_fg_trace(const EffectiveModel& model, const FgConfig& cfg) {
  return detail::fg_detect_trace(model.H, model.r, model.sigma2, 4.0, cfg);
}

}  // namespace gmdet
