#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gmdet/sim.hpp"

namespace gmdet {

/// A canned experiment. Kind selects the CLI subcommand the preset belongs
/// to: "ber", "sweep-damping", "trace", or "calibrate-theta".
struct Preset {
  std::string name;
  std::string kind;
  std::string description;
  ExperimentSpec spec;
  std::vector<double> alpha_grid;  // sweep-damping presets
  int max_iters = 0;               // trace presets
};

namespace detail {

inline std::vector<double> linspace_grid(double lo, double step, double hi) {
  std::vector<double> g;
  for (double v = lo; v <= hi + 1e-9; v += step) g.push_back(v);
  return g;
}

}  // namespace detail

inline std::vector<Preset> preset_registry() {
  using detail::linspace_grid;
  std::vector<Preset> ps;
  auto mrf = [](int iters, double am, double ab = 0.0) {
    DetectorVariant v;
    v.id = DetectorId::Mrf;
    v.cfg.num_iter = iters;
    v.cfg.alpha_m = am;
    v.cfg.alpha_b = ab;
    return v;
  };
  auto fg = [](int iters, double am) {
    DetectorVariant v;
    v.id = DetectorId::Fg;
    v.cfg.num_iter = iters;
    v.cfg.alpha_m = am;
    return v;
  };

  {  // damping sweep, large flat-fading V-BLAST, 8 dB
    for (int n : {16, 24}) {
      Preset p;
      p.name = "fig4-n" + std::to_string(n);
      p.kind = "sweep-damping";
      p.description = std::to_string(n) + "x" + std::to_string(n) +
                      " V-BLAST, flat fading, BPSK, 8 dB: BER vs message damping factor";
      p.spec.sys = {n, n, 1, 1, Modulation::bpsk()};
      p.spec.det = mrf(5, 0.0);
      p.spec.snr_db = {8.0};
      p.alpha_grid = linspace_grid(0.0, 0.05, 0.9);
      ps.push_back(std::move(p));
    }
  }
  for (int n : {4, 8, 16, 24, 32}) {  // MRF BER vs SNR, flat fading
    Preset p;
    p.name = "fig5-n" + std::to_string(n);
    p.kind = "ber";
    p.description = std::to_string(n) + "x" + std::to_string(n) +
                    " V-BLAST, flat fading, BPSK, MRF BP (alpha_m=0.2, 5 iters)";
    p.spec.sys = {n, n, 1, 1, Modulation::bpsk()};
    p.spec.det = mrf(5, 0.2);
    p.spec.snr_db = linspace_grid(0.0, 1.0, 12.0);
    ps.push_back(std::move(p));
  }
  {  // ISI damping sweep at 6 dB
    Preset p;
    p.name = "fig7";
    p.kind = "sweep-damping";
    p.description = "4x4 MIMO-ISI [L=10,K=50], BPSK, 6 dB, 7 iters: BER vs message damping factor";
    p.spec.sys = {4, 4, 10, 50, Modulation::bpsk()};
    p.spec.det = mrf(7, 0.0);
    p.spec.snr_db = {6.0};
    p.alpha_grid = linspace_grid(0.0, 0.05, 0.9);
    ps.push_back(std::move(p));
  }
  for (double am : {0.0, 0.45}) {  // convergence/divergence trace
    Preset p;
    p.name = am == 0.0 ? "fig8-undamped" : "fig8-damped";
    p.kind = "trace";
    p.description = "4x4 MIMO-ISI [L=20,K=100], BPSK, 7 dB: BER vs BP iteration count (alpha_m=" +
                    std::to_string(am) + ")";
    p.spec.sys = {4, 4, 20, 100, Modulation::bpsk()};
    p.spec.det = mrf(12, am);
    p.spec.snr_db = {7.0};
    p.max_iters = 12;
    ps.push_back(std::move(p));
  }
  {
    const int Ls[] = {5, 10, 20};
    const int Ks[] = {25, 50, 100};
    for (int i = 0; i < 3; ++i) {  // MRF vs SNR in ISI channels, plus the FD-MMSE baseline
      Preset p;
      p.name = "fig9-L" + std::to_string(Ls[i]);
      p.kind = "ber";
      p.description = "4x4 MIMO-ISI [L=" + std::to_string(Ls[i]) + ",K=" + std::to_string(Ks[i]) +
                      "], BPSK, MRF BP (alpha_m=0.45, 10 iters) vs SNR";
      p.spec.sys = {4, 4, Ls[i], Ks[i], Modulation::bpsk()};
      p.spec.det = mrf(10, 0.45);
      p.spec.snr_db = linspace_grid(0.0, 1.0, 8.0);
      ps.push_back(p);
      p.name = "fig9-L" + std::to_string(Ls[i]) + "-fdmmse";
      p.description = "4x4 MIMO-ISI [L=" + std::to_string(Ls[i]) + ",K=" + std::to_string(Ks[i]) +
                      "], BPSK, CPSC FD-MMSE baseline vs SNR";
      p.spec.det = DetectorVariant{DetectorId::FdMmse, {}, ""};
      ps.push_back(std::move(p));
    }
  }
  for (int n : {8, 16, 32}) {  // FG-GAI, flat fading
    Preset p;
    p.name = "fig11-n" + std::to_string(n);
    p.kind = "ber";
    p.description = std::to_string(n) + "x" + std::to_string(n) +
                    " V-BLAST, flat fading, BPSK, FG-GAI BP (alpha_m=0.4, 20 iters)";
    p.spec.sys = {n, n, 1, 1, Modulation::bpsk()};
    p.spec.det = fg(20, 0.4);
    p.spec.snr_db = linspace_grid(0.0, 1.0, 12.0);
    ps.push_back(std::move(p));
  }
  for (int n : {4, 8, 16}) {  // FG-GAI, ISI, large-dimension behavior
    Preset p;
    p.name = "fig12-n" + std::to_string(n);
    p.kind = "ber";
    p.description = std::to_string(n) + "x" + std::to_string(n) +
                    " MIMO-ISI [L=6,K=64], BPSK, FG-GAI BP (alpha_m=0.4, 10 iters)";
    p.spec.sys = {n, n, 6, 64, Modulation::bpsk()};
    p.spec.det = fg(10, 0.4);
    p.spec.snr_db = linspace_grid(0.0, 1.0, 8.0);
    ps.push_back(std::move(p));
  }
  for (int L : {5, 20}) {  // MRF vs FG comparison settings
    const int K = L == 5 ? 25 : 100;
    for (bool use_fg : {false, true}) {
      Preset p;
      p.name = "fig13-L" + std::to_string(L) + (use_fg ? "-fg" : "-mrf");
      p.kind = "ber";
      p.description = "4x4 MIMO-ISI [L=" + std::to_string(L) + ",K=" + std::to_string(K) + "], BPSK, " +
                      (use_fg ? "FG-GAI BP (alpha_m=0.4)" : "MRF BP (alpha_m=0.45)");
      p.spec.sys = {4, 4, L, K, Modulation::bpsk()};
      p.spec.det = use_fg ? fg(10, 0.4) : mrf(10, 0.45);
      p.spec.snr_db = linspace_grid(0.0, 1.0, 8.0);
      ps.push_back(std::move(p));
    }
  }
  for (bool hybrid : {false, true}) {  // 16-QAM RTS vs hybrid RTS-BP
    Preset p;
    p.name = hybrid ? "fig15-hybrid" : "fig15-rts";
    p.kind = "ber";
    p.description = std::string("16x16 MIMO-ISI [L=6,K=64], 16-QAM, ") +
                    (hybrid ? "hybrid RTS-BP" : "plain RTS");
    p.spec.sys = {16, 16, 6, 64, Modulation::qam(16)};
    p.spec.det.id = hybrid ? DetectorId::Hybrid : DetectorId::Rts;
    p.spec.det.cfg.rts.max_iterations = 300;
    p.spec.snr_db = linspace_grid(8.0, 2.0, 20.0);
    ps.push_back(std::move(p));
  }
  {  // M1 pdf calibration setting
    Preset p;
    p.name = "fig16";
    p.kind = "calibrate-theta";
    p.description = "32x32 V-BLAST, flat fading, 64-QAM, 30 dB: simulated M1 pdf for the theta gate";
    p.spec.sys = {32, 32, 1, 1, Modulation::qam(64)};
    p.spec.det.id = DetectorId::Rts;
    p.spec.snr_db = {30.0};
    p.spec.stop.max_frames = 2000;
    ps.push_back(std::move(p));
  }
  return ps;
}

inline std::optional<Preset> find_preset(const std::string& name) {
  for (auto& p : preset_registry())
    if (p.name == name) return p;
  return std::nullopt;
}

}  // namespace gmdet
