#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gmdet/baselines.hpp"
#include "gmdet/channel.hpp"
#include "gmdet/fg_gai_bp.hpp"
#include "gmdet/mrf_bp.hpp"
#include "gmdet/qam_search.hpp"
#include "gmdet/rng.hpp"

namespace gmdet {

struct SystemSpec {
  int n_t = 4;
  int n_r = 4;
  int L = 1;
  int K = 1;
  Modulation mod = Modulation::bpsk();
};

enum class DetectorId {
  Mrf,
  Fg,
  FdMmse,
  MapOracle,
  MlOracle,
  Rts,
  Hybrid,
  SelectiveHybrid,
  CoinFlip,  // test instrument: uniform random bits
};

inline const char* detector_name(DetectorId id) {
  switch (id) {
    case DetectorId::Mrf: return "mrf";
    case DetectorId::Fg: return "fg";
    case DetectorId::FdMmse: return "fd-mmse";
    case DetectorId::MapOracle: return "map";
    case DetectorId::MlOracle: return "ml";
    case DetectorId::Rts: return "rts";
    case DetectorId::Hybrid: return "hybrid";
    case DetectorId::SelectiveHybrid: return "selective-hybrid";
    case DetectorId::CoinFlip: return "coin";
  }
  return "?";
}

inline std::optional<DetectorId> detector_from_name(const std::string& s) {
  for (DetectorId id : {DetectorId::Mrf, DetectorId::Fg, DetectorId::FdMmse, DetectorId::MapOracle,
                        DetectorId::MlOracle, DetectorId::Rts, DetectorId::Hybrid,
                        DetectorId::SelectiveHybrid, DetectorId::CoinFlip})
    if (s == detector_name(id)) return id;
  return std::nullopt;
}

/// Everything a detector variant might need. Unused parts are ignored by the
/// dispatched detector.
struct DetectorConfig {
  int num_iter = 10;
  double alpha_m = 0.0;
  double alpha_b = 0.0;
  RtsConfig rts;
  FgConfig hybrid_fg;      // BP stage inside the hybrid loop
  int hybrid_loops = 2;
  double theta = 0.0;      // selective-BP gate
};

struct DetectorVariant {
  DetectorId id = DetectorId::Mrf;
  DetectorConfig cfg;
  std::string label;  // CSV identifier; defaults to detector_name
};

struct StoppingRule {
  long min_bit_errors = 200;
  long max_frames = 20000;
};

struct ExperimentSpec {
  SystemSpec sys;
  DetectorVariant det;
  std::vector<double> snr_db;
  StoppingRule stop;
  std::uint64_t seed = 1;
  int workers = 0;  // 0 = hardware concurrency
};

struct BerRecord {
  double snr_db = 0.0;
  std::string label;
  long bits = 0;
  long bit_errors = 0;
  long frames = 0;
  long frame_errors = 0;
  double elapsed_s = 0.0;
  std::uint64_t seed = 0;

  double ber() const { return bits > 0 ? double(bit_errors) / double(bits) : 0.0; }
};

// ---------------------------------------------------------------------------
// frame generation and bit bookkeeping

struct FrameData {
  ChannelTaps taps;
  std::vector<Eigen::MatrixXcd> blocks;
  EffectiveModel model;
  Eigen::VectorXcd x;
  std::vector<std::uint8_t> bits;  // transmitted bits, 0 <-> +1 layer
  std::uint64_t frame_seed = 0;
};

inline int bits_per_frame(const SystemSpec& sys) {
  return sys.K * sys.n_t * sys.mod.bits_per_symbol();
}

/// Map bits to symbols: each +-1 layer carries 1-2b. QAM symbols pack the
/// real-dimension layers first, then the imaginary ones.
inline Eigen::VectorXcd symbols_from_bits(const SystemSpec& sys, const std::vector<std::uint8_t>& bits) {
  const int n = sys.K * sys.n_t;
  Eigen::VectorXcd x(n);
  if (!sys.mod.is_qam()) {
    for (int i = 0; i < n; ++i) x[i] = bits[i] ? -1.0 : +1.0;
    return x;
  }
  const int N = sys.mod.layers();
  const double c = sys.mod.scale();
  for (int i = 0; i < n; ++i) {
    int re = 0, im = 0;
    for (int j = 0; j < N; ++j) {
      re += (1 << j) * (bits[i * 2 * N + j] ? -1 : +1);
      im += (1 << j) * (bits[i * 2 * N + N + j] ? -1 : +1);
    }
    x[i] = cplx(c * re, c * im);
  }
  return x;
}

inline std::vector<std::uint8_t> bits_from_symbols(const SystemSpec& sys, const Eigen::VectorXcd& x) {
  const int n = sys.K * sys.n_t;
  std::vector<std::uint8_t> bits(bits_per_frame(sys));
  if (!sys.mod.is_qam()) {
    for (int i = 0; i < n; ++i) bits[i] = x[i].real() >= 0.0 ? 0 : 1;
    return bits;
  }
  const int N = sys.mod.layers();
  const double c = sys.mod.scale();
  for (int i = 0; i < n; ++i) {
    const auto bre = bit_expand(quantize_pam(x[i].real() / c, N), N);
    const auto bim = bit_expand(quantize_pam(x[i].imag() / c, N), N);
    for (int j = 0; j < N; ++j) {
      bits[i * 2 * N + j] = bre[j] > 0 ? 0 : 1;
      bits[i * 2 * N + N + j] = bim[j] > 0 ? 0 : 1;
    }
  }
  return bits;
}

inline FrameData make_frame(const SystemSpec& sys, double snr_db, std::uint64_t master_seed,
                            std::uint64_t point_idx, std::uint64_t frame_idx) {
  FrameData f;
  f.frame_seed = derive_seed(master_seed, point_idx, frame_idx);
  auto rng = make_rng(f.frame_seed);
  f.taps = generate_channel(sys.n_t, sys.n_r, sys.L, rng);
  f.bits.resize(bits_per_frame(sys));
  for (auto& b : f.bits) b = static_cast<std::uint8_t>(rng() & 1u);
  f.x = symbols_from_bits(sys, f.bits);
  FrameParams params{sys.K, sys.L - 1, sys.mod};
  f.model = simulate_frame(f.taps, params, f.x, snr_db, rng);
  f.blocks = build_frequency_blocks(f.taps, sys.K);
  return f;
}

// ---------------------------------------------------------------------------
// detector dispatch

/// Per-frame scratch shared across variants so a damping sweep reuses the
/// model-dependent preprocessing (potentials, realified model).
struct FrameCache {
  std::optional<MrfPotentials> mrf_pot;
  std::optional<RealModel> real_model;

  const MrfPotentials& potentials(const SystemSpec& sys, const FrameData& f) {
    if (!mrf_pot) {
      if (!sys.mod.is_qam()) {
        mrf_pot = compute_potentials(f.model);
      } else {
        const RealModel& rm = realified(sys, f);
        mrf_pot = compute_potentials_real(rm.scale * rm.H, rm.r, rm.sigma2);
      }
    }
    return *mrf_pot;
  }
  const RealModel& realified(const SystemSpec& sys, const FrameData& f) {
    if (!real_model) real_model = realify(f.model, sys.mod);
    return *real_model;
  }
};

inline void require_bp_alphabet(const SystemSpec& sys) {
  if (sys.mod.is_qam() && sys.mod.M != 4)
    throw std::runtime_error("BP detectors support BPSK or 4-QAM (via the realified model); use the "
                             "hybrid detector for higher-order QAM");
}

inline Eigen::VectorXcd pm1_to_symbols(const SystemSpec& sys, const RealModel& rm,
                                       const Eigen::VectorXi& d) {
  Eigen::VectorXd x(rm.n());
  for (int i = 0; i < rm.n(); ++i) x[i] = rm.scale * d[i];
  return complexify(rm, x);
}

inline std::vector<std::uint8_t> detect_bits(const SystemSpec& sys, const FrameData& f,
                                             const DetectorVariant& v, FrameCache& cache) {
  switch (v.id) {
    case DetectorId::Mrf: {
      require_bp_alphabet(sys);
      MrfConfig cfg{v.cfg.num_iter, {v.cfg.alpha_m, v.cfg.alpha_b}};
      MrfResult res = detect_mrf_potentials(cache.potentials(sys, f), cfg);
      if (!sys.mod.is_qam()) {
        std::vector<std::uint8_t> bits(res.decisions.size());
        for (Eigen::Index i = 0; i < res.decisions.size(); ++i) bits[i] = res.decisions[i] > 0 ? 0 : 1;
        return bits;
      }
      return bits_from_symbols(sys, pm1_to_symbols(sys, cache.realified(sys, f), res.decisions));
    }
    case DetectorId::Fg: {
      require_bp_alphabet(sys);
      FgConfig cfg{v.cfg.num_iter, v.cfg.alpha_m};
      if (!sys.mod.is_qam()) {
        FgResult res = detect_fg(f.model, cfg);
        std::vector<std::uint8_t> bits(res.decisions.size());
        for (Eigen::Index i = 0; i < res.decisions.size(); ++i) bits[i] = res.decisions[i] > 0 ? 0 : 1;
        return bits;
      }
      const RealModel& rm = cache.realified(sys, f);
      FgResult res = detect_fg_real(rm.scale * rm.H, rm.r, rm.sigma2 / 2.0, cfg);
      return bits_from_symbols(sys, pm1_to_symbols(sys, rm, res.decisions));
    }
    case DetectorId::FdMmse: {
      Eigen::VectorXcd soft = fd_mmse_equalize(f.blocks, f.model.r, f.model.sigma2);
      return bits_from_symbols(sys, soft);
    }
    case DetectorId::MapOracle:
      return bits_from_symbols(sys, map_oracle(f.model, alphabet_points(sys.mod)).map_decision);
    case DetectorId::MlOracle:
      return bits_from_symbols(sys, ml_oracle(f.model, alphabet_points(sys.mod)));
    case DetectorId::Rts:
      return bits_from_symbols(sys, rts_only_detect(f.model, sys.mod, v.cfg.rts).x);
    case DetectorId::Hybrid: {
      HybridConfig hc{v.cfg.rts, v.cfg.hybrid_fg, v.cfg.hybrid_loops};
      return bits_from_symbols(sys, hybrid_detect(f.model, sys.mod, hc).x);
    }
    case DetectorId::SelectiveHybrid: {
      HybridConfig hc{v.cfg.rts, v.cfg.hybrid_fg, v.cfg.hybrid_loops};
      return bits_from_symbols(sys, selective_hybrid_detect(f.model, sys.mod, hc, v.cfg.theta).x);
    }
    case DetectorId::CoinFlip: {
      auto rng = make_rng(derive_seed(f.frame_seed, 0x5eed));
      std::vector<std::uint8_t> bits(bits_per_frame(sys));
      for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1u);
      return bits;
    }
  }
  throw std::logic_error("detect_bits: unknown detector");
}

// ---------------------------------------------------------------------------
// Monte-Carlo engine

namespace detail {

struct FrameOutcome {
  std::vector<long> bit_errors;  // per variant
};

inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Runs frames 0,1,2,... in parallel batches; fn(frame) -> per-variant error
/// counts. Accumulation and the stopping decision are sequential in frame
/// index, so results are identical for any worker count.
template <typename FrameFn>
std::vector<BerRecord> run_point(const SystemSpec& sys, const std::vector<DetectorVariant>& variants,
                                 double snr_db, const StoppingRule& stop, std::uint64_t seed,
                                 std::uint64_t point_idx, int workers, FrameFn&& frame_fn) {
  const auto t0 = std::chrono::steady_clock::now();
  const int nv = static_cast<int>(variants.size());
  const int nw = resolve_workers(workers);
  const long batch = std::max<long>(4 * nw, 16);

  std::vector<BerRecord> recs(nv);
  std::vector<bool> closed(nv, false);
  for (int v = 0; v < nv; ++v) {
    recs[v].snr_db = snr_db;
    recs[v].label = variants[v].label.empty() ? detector_name(variants[v].id) : variants[v].label;
    recs[v].seed = seed;
  }
  const int fbits = bits_per_frame(sys);

  long next_frame = 0;
  bool all_closed = false;
  std::string worker_error;
  std::mutex err_mu;
  while (!all_closed && next_frame < stop.max_frames) {
    const long lo = next_frame;
    const long hi = std::min<long>(lo + batch, stop.max_frames);
    std::vector<FrameOutcome> out(hi - lo);
    std::atomic<long> cursor{lo};
    auto work = [&]() {
      for (;;) {
        const long fidx = cursor.fetch_add(1);
        if (fidx >= hi) break;
        try {
          out[fidx - lo].bit_errors = frame_fn(snr_db, point_idx, fidx);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (worker_error.empty())
            worker_error = std::string(e.what()) + " [replay: point " + std::to_string(point_idx) +
                           " frame " + std::to_string(fidx) + " seed " +
                           std::to_string(derive_seed(seed, point_idx, fidx)) + "]";
        }
      }
    };
    if (nw == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < nw; ++w) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }
    if (!worker_error.empty()) throw std::runtime_error(worker_error);

    for (long fidx = lo; fidx < hi && !all_closed; ++fidx) {
      all_closed = true;
      for (int v = 0; v < nv; ++v) {
        if (closed[v]) continue;
        const long errs = out[fidx - lo].bit_errors[v];
        recs[v].bits += fbits;
        recs[v].bit_errors += errs;
        recs[v].frames += 1;
        recs[v].frame_errors += errs > 0 ? 1 : 0;
        if (recs[v].bit_errors >= stop.min_bit_errors || recs[v].frames >= stop.max_frames)
          closed[v] = true;
        else
          all_closed = false;
      }
    }
    next_frame = hi;
  }
  const double el =
      std::chrono::duration_cast<std::chrono::duration<double>>(std::chrono::steady_clock::now() - t0)
          .count();
  for (auto& r : recs) r.elapsed_s = el;
  return recs;
}

}  // namespace detail

/// Common-random-number comparison: all variants see the same frames; each
/// variant accumulates until its own stopping rule fires, so a single-variant
/// run is reproduced bit-for-bit inside any comparison with the same seed.
inline std::vector<BerRecord> run_ber_comparison(const SystemSpec& sys,
                                                 const std::vector<DetectorVariant>& variants,
                                                 double snr_db, const StoppingRule& stop,
                                                 std::uint64_t seed, int workers = 0,
                                                 std::uint64_t point_idx = 0) {
  auto frame_fn = [&](double snr, std::uint64_t pt, long fidx) {
    FrameData f = make_frame(sys, snr, seed, pt, fidx);
    FrameCache cache;
    std::vector<long> errs(variants.size(), 0);
    for (size_t v = 0; v < variants.size(); ++v) {
      auto bits = detect_bits(sys, f, variants[v], cache);
      long e = 0;
      for (size_t b = 0; b < bits.size(); ++b) e += bits[b] != f.bits[b];
      errs[v] = e;
    }
    return errs;
  };
  return detail::run_point(sys, variants, snr_db, stop, seed, point_idx, workers, frame_fn);
}

/// Per-SNR-point Monte-Carlo BER with the configured stopping rule.
inline std::vector<BerRecord> run_ber_experiment(const ExperimentSpec& spec) {
  std::vector<BerRecord> out;
  for (size_t p = 0; p < spec.snr_db.size(); ++p) {
    auto recs = run_ber_comparison(spec.sys, {spec.det}, spec.snr_db[p], spec.stop, spec.seed,
                                   spec.workers, p);
    out.push_back(recs[0]);
  }
  return out;
}

/// BER as a function of the message damping factor, common seed across the
/// grid. MRF only.
inline std::vector<BerRecord> sweep_damping(const ExperimentSpec& spec,
                                            const std::vector<double>& alpha_grid) {
  if (spec.det.id != DetectorId::Mrf) throw std::invalid_argument("sweep_damping: MRF detector required");
  if (spec.snr_db.size() != 1) throw std::invalid_argument("sweep_damping: one SNR point expected");
  std::vector<DetectorVariant> variants;
  for (double a : alpha_grid) {
    DetectorVariant v = spec.det;
    v.cfg.alpha_m = a;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "mrf_am%.4g", a);
    v.label = buf;
    variants.push_back(std::move(v));
  }
  return run_ber_comparison(spec.sys, variants, spec.snr_db[0], spec.stop, spec.seed, spec.workers, 0);
}

/// BER after each BP iteration count (0 = matched-filter decisions from the
/// self potentials alone), shared frames across iteration counts. The
/// stopping rule applies to the final iteration's accumulator.
inline std::vector<BerRecord> convergence_trace(const ExperimentSpec& spec, int max_iters) {
  if (spec.det.id != DetectorId::Mrf && spec.det.id != DetectorId::Fg)
    throw std::invalid_argument("convergence_trace: MRF or FG detector required");
  if (spec.snr_db.size() != 1) throw std::invalid_argument("convergence_trace: one SNR point expected");
  const SystemSpec& sys = spec.sys;
  require_bp_alphabet(sys);

  std::vector<DetectorVariant> variants(max_iters + 1);
  for (int t = 0; t <= max_iters; ++t) {
    variants[t] = spec.det;
    variants[t].cfg.num_iter = t;
    variants[t].label = std::string(detector_name(spec.det.id)) + "_it" + std::to_string(t);
  }
  // frames are shared; each frame yields the whole trace from one BP run
  auto frame_fn = [&](double snr, std::uint64_t pt, long fidx) {
    FrameData f = make_frame(sys, snr, spec.seed, pt, fidx);
    FrameCache cache;
    std::vector<Eigen::VectorXi> trace;
    if (spec.det.id == DetectorId::Mrf) {
      MrfConfig cfg{max_iters, {spec.det.cfg.alpha_m, spec.det.cfg.alpha_b}};
      trace = detect_mrf_trace(cache.potentials(sys, f), cfg);
    } else {
      FgConfig cfg{max_iters, spec.det.cfg.alpha_m};
      if (!sys.mod.is_qam()) {
        trace = detect_fg_trace(f.model, cfg);
      } else {
        const RealModel& rm = cache.realified(sys, f);
        trace = detail::fg_detect_trace(rm.scale * rm.H, rm.r, rm.sigma2 / 2.0, 2.0, cfg);
      }
      // prepend matched-filter decisions as the iteration-0 row
      const MrfPotentials& pot = cache.potentials(sys, f);
      Eigen::VectorXi d0(pot.size());
      for (int i = 0; i < pot.size(); ++i) d0[i] = pot.z[i].real() >= 0.0 ? +1 : -1;
      trace.insert(trace.begin(), d0);
    }
    std::vector<long> errs(max_iters + 1, 0);
    for (int t = 0; t <= max_iters; ++t) {
      const Eigen::VectorXi& d = trace[t];
      std::vector<std::uint8_t> bits;
      if (!sys.mod.is_qam()) {
        bits.resize(d.size());
        for (Eigen::Index i = 0; i < d.size(); ++i) bits[i] = d[i] > 0 ? 0 : 1;
      } else {
        bits = bits_from_symbols(sys, pm1_to_symbols(sys, cache.realified(sys, f), d));
      }
      for (size_t b = 0; b < bits.size(); ++b) errs[t] += bits[b] != f.bits[b];
    }
    return errs;
  };
  return detail::run_point(sys, variants, spec.snr_db[0], spec.stop, spec.seed, 0, spec.workers,
                           frame_fn);
}

}  // namespace gmdet
