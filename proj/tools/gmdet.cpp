// gmdet: Monte-Carlo BER simulator for graphical-model MIMO-ISI detectors.
//
// Subcommands: ber, sweep-damping, trace, calibrate-theta, selftest.
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "gmdet/baselines.hpp"
#include "gmdet/io.hpp"
#include "gmdet/presets.hpp"
#include "gmdet/sim.hpp"

namespace {

using namespace gmdet;

struct CommonOpts {
  std::string preset;
  int n_t = 4, n_r = 4, L = 1, K = 1;
  std::string mod = "bpsk";
  std::string detector = "mrf";
  std::vector<std::string> snr;  // values or lo:step:hi ranges
  int iters = -1;
  double alpha_m = -1.0, alpha_b = -1.0;
  double theta = 0.0;
  int rts_iters = -1;
  long min_errors = -1, max_frames = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
  std::string out;
  std::string format = "csv";
  std::string grid;  // sweep-damping alpha grid, lo:step:hi
  int max_iters = 10;
  long frames = 500;  // calibrate-theta sample size
  std::string config_path;
};

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  const auto c1 = s.find(':');
  if (c1 == std::string::npos) {
    out.push_back(std::stod(s));
    return out;
  }
  const auto c2 = s.find(':', c1 + 1);
  if (c2 == std::string::npos) throw CLI::ValidationError("grid", "expected lo:step:hi, got " + s);
  const double lo = std::stod(s.substr(0, c1));
  const double step = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
  const double hi = std::stod(s.substr(c2 + 1));
  if (step <= 0.0) throw CLI::ValidationError("grid", "step must be > 0");
  for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
  return out;
}

std::vector<double> parse_snr_list(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& it : items) {
    auto part = parse_grid(it);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

Modulation parse_mod(const std::string& s) {
  if (s == "bpsk") return Modulation::bpsk();
  const auto pos = s.find("qam");
  if (pos != std::string::npos && pos > 0) return Modulation::qam(std::stoi(s.substr(0, pos)));
  throw CLI::ValidationError("mod", "expected bpsk or <M>qam, got " + s);
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("GMDET_SEED")) return std::strtoull(env, nullptr, 10);
  return 1;
}

void add_common(CLI::App* cmd, CommonOpts& o, bool with_preset = true) {
  if (with_preset) cmd->add_option("--preset", o.preset, "named experiment from the preset registry");
  cmd->add_option("--nt", o.n_t, "transmit antennas");
  cmd->add_option("--nr", o.n_r, "receive antennas");
  cmd->add_option("--L", o.L, "multipath components");
  cmd->add_option("--K", o.K, "data channel uses per frame");
  cmd->add_option("--mod", o.mod, "modulation: bpsk or <M>qam");
  cmd->add_option("--detector", o.detector,
                  "detector: mrf|fg|fd-mmse|map|ml|rts|hybrid|selective-hybrid");
  cmd->add_option("--snr", o.snr, "SNR points in dB (values and/or lo:step:hi)");
  cmd->add_option("--iters", o.iters, "BP iterations");
  cmd->add_option("--alpha-m", o.alpha_m, "message damping factor");
  cmd->add_option("--alpha-b", o.alpha_b, "belief damping factor");
  cmd->add_option("--theta", o.theta, "selective-BP threshold");
  cmd->add_option("--rts-iters", o.rts_iters, "RTS iteration budget");
  cmd->add_option("--min-errors", o.min_errors, "stop after this many bit errors per point");
  cmd->add_option("--max-frames", o.max_frames, "frame cap per point");
  cmd->add_option("--seed", o.seed, "master seed (default: GMDET_SEED env var, else 1)")
      ->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--workers", o.workers, "worker threads (0 = all cores)");
  cmd->add_option("--out", o.out, "output file (default: stdout)");
  cmd->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--config", o.config_path, "flat key=value config file; flags override");
}

// Expand `--config FILE` by appending the file's key=value pairs as flags,
// except keys the command line already sets.
void inject_config(std::vector<std::string>& args) {
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      break;
    }
  }
  if (path.empty()) return;
  std::ifstream file(path);
  if (!file) throw CLI::ValidationError("config", "cannot open " + path);
  std::set<std::string> given;
  for (const auto& a : args)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));
  std::string line;
  while (std::getline(file, line)) {
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("config", "expected key=value, got: " + line);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = "--" + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (given.count(key)) continue;
    args.push_back(key);
    args.push_back(value);
  }
}

ExperimentSpec build_spec(const CommonOpts& o, const Preset* preset) {
  ExperimentSpec spec;
  if (preset) {
    spec = preset->spec;
  } else {
    spec.sys.n_t = o.n_t;
    spec.sys.n_r = o.n_r;
    spec.sys.L = o.L;
    spec.sys.K = o.K;
    spec.sys.mod = parse_mod(o.mod);
    auto det = detector_from_name(o.detector);
    if (!det) throw CLI::ValidationError("detector", "unknown detector " + o.detector);
    spec.det.id = *det;
  }
  if (!o.snr.empty()) spec.snr_db = parse_snr_list(o.snr);
  if (o.iters >= 0) spec.det.cfg.num_iter = o.iters;
  if (o.alpha_m >= 0.0) spec.det.cfg.alpha_m = o.alpha_m;
  if (o.alpha_b >= 0.0) spec.det.cfg.alpha_b = o.alpha_b;
  if (o.rts_iters > 0) spec.det.cfg.rts.max_iterations = o.rts_iters;
  spec.det.cfg.theta = o.theta;
  if (o.min_errors > 0) spec.stop.min_bit_errors = o.min_errors;
  if (o.max_frames > 0) spec.stop.max_frames = o.max_frames;
  spec.seed = o.seed_set ? o.seed : default_seed();
  spec.workers = o.workers;
  if (spec.snr_db.empty()) throw CLI::ValidationError("snr", "at least one SNR point required");
  return spec;
}

void emit(const CommonOpts& o, const std::vector<ResultRow>& rows) {
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!o.out.empty()) {
    file.open(o.out);
    if (!file) throw CLI::ValidationError("out", "cannot open " + o.out);
    os = &file;
  }
  if (o.format == "json")
    write_json(*os, rows);
  else
    write_csv(*os, rows);
}

int run_ber(const CommonOpts& o, const Preset* preset) {
  ExperimentSpec spec = build_spec(o, preset);
  auto recs = run_ber_experiment(spec);
  std::vector<ResultRow> rows;
  for (const auto& r : recs) rows.push_back(make_row(spec.sys, spec.det, r));
  emit(o, rows);
  return 0;
}

int run_sweep(const CommonOpts& o, const Preset* preset) {
  ExperimentSpec spec = build_spec(o, preset);
  spec.det.id = DetectorId::Mrf;
  std::vector<double> grid;
  if (!o.grid.empty())
    grid = parse_grid(o.grid);
  else if (preset && !preset->alpha_grid.empty())
    grid = preset->alpha_grid;
  else
    throw CLI::ValidationError("grid", "sweep-damping needs --grid lo:step:hi");
  auto recs = sweep_damping(spec, grid);
  std::vector<ResultRow> rows;
  for (size_t i = 0; i < recs.size(); ++i) {
    DetectorVariant v = spec.det;
    v.cfg.alpha_m = grid[i];
    rows.push_back(make_row(spec.sys, v, recs[i]));
  }
  emit(o, rows);
  return 0;
}

int run_trace(const CommonOpts& o, const Preset* preset) {
  ExperimentSpec spec = build_spec(o, preset);
  const int max_iters = preset && preset->max_iters > 0 && o.max_iters == 10 ? preset->max_iters
                                                                             : o.max_iters;
  auto recs = convergence_trace(spec, max_iters);
  std::vector<ResultRow> rows;
  for (size_t t = 0; t < recs.size(); ++t) {
    DetectorVariant v = spec.det;
    v.cfg.num_iter = static_cast<int>(t);
    rows.push_back(make_row(spec.sys, v, recs[t]));
  }
  emit(o, rows);
  return 0;
}

int run_calibrate(const CommonOpts& o, const Preset* preset) {
  ExperimentSpec spec = build_spec(o, preset);
  const double snr = spec.snr_db[0];
  std::vector<std::pair<double, bool>> samples;  // (m1, rts output correct)
  for (long f = 0; f < o.frames; ++f) {
    FrameData fd = make_frame(spec.sys, snr, spec.seed, 0, f);
    HybridResult res = rts_only_detect(fd.model, spec.sys.mod, spec.det.cfg.rts);
    auto bits = bits_from_symbols(spec.sys, res.x);
    samples.emplace_back(res.m1, bits == fd.bits);
  }
  // threshold minimizing misclassification of "RTS output erroneous"
  std::vector<double> cands;
  for (auto& s : samples) cands.push_back(s.first);
  std::sort(cands.begin(), cands.end());
  double best_theta = 0.0;
  long best_miss = std::numeric_limits<long>::max();
  for (double th : cands) {
    long miss = 0;
    for (auto& [m1, ok] : samples) miss += ok ? (m1 > th) : (m1 <= th);
    if (miss < best_miss) {
      best_miss = miss;
      best_theta = th;
    }
  }
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!o.out.empty()) {
    file.open(o.out);
    if (!file) throw CLI::ValidationError("out", "cannot open " + o.out);
    os = &file;
  }
  *os << "m1,rts_correct\n";
  for (auto& [m1, ok] : samples) *os << m1 << ',' << (ok ? 1 : 0) << "\n";
  std::cerr << "suggested theta: " << best_theta << " (misclassified " << best_miss << "/"
            << samples.size() << " frames)\n";
  return 0;
}

int run_selftest() {
  auto rng = make_rng(7);
  // F unitarity via the effective matrix of an identity-tap channel
  {
    ChannelTaps taps{2, 2, 1, {Eigen::MatrixXcd::Identity(2, 2)}};
    auto Hf = build_effective_matrix(build_frequency_blocks(taps, 8), 8, 2);
    const double err = (Hf.adjoint() * Hf - Eigen::MatrixXcd::Identity(16, 16)).cwiseAbs().maxCoeff();
    if (err > 1e-12) throw std::runtime_error("F unitarity check failed");
    std::cout << "ok: DFT precoding matrix unitary (max dev " << err << ")\n";
  }
  // frequency/time model equivalence
  {
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      ChannelTaps taps = generate_channel(2, 2, 3, rng);
      const int K = 8;
      Eigen::VectorXcd x(K * 2);
      for (int i = 0; i < x.size(); ++i) x[i] = (rng() & 1) ? 1.0 : -1.0;
      FrameParams params{K, 2, Modulation::bpsk()};
      auto model = simulate_frame(taps, params, x, std::numeric_limits<double>::infinity(), rng);
      worst = std::max(worst, (model.r - model.H * x).norm() / model.r.norm());
    }
    if (worst > 1e-10) throw std::runtime_error("time/frequency equivalence failed");
    std::cout << "ok: noiseless frequency observation matches H_eff*x (worst rel err " << worst << ")\n";
  }
  // oracle agreement and detector anchors on tiny instances
  {
    for (int trial = 0; trial < 20; ++trial) {
      ChannelTaps taps = generate_channel(2, 2, 1, rng);
      Eigen::VectorXcd x(2);
      x << ((rng() & 1) ? 1.0 : -1.0), ((rng() & 1) ? 1.0 : -1.0);
      FrameParams params{1, 0, Modulation::bpsk()};
      auto model = simulate_frame(taps, params, x, 10.0, rng);
      auto res = map_oracle(model, alphabet_points(Modulation::bpsk()));
      auto ml = ml_oracle(model, alphabet_points(Modulation::bpsk()));
      if ((res.ml_decision - ml).norm() > 0) throw std::runtime_error("oracle disagreement");
      if (std::abs(res.marginals.row(0).sum() - 1.0) > 1e-12)
        throw std::runtime_error("oracle marginals not normalized");
    }
    std::cout << "ok: MAP/ML oracles agree; marginals normalized\n";
  }
  std::cout << "selftest passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gmdet: graphical-model detection/equalization BER simulator"};
  app.require_subcommand(1);

  CommonOpts ber_o, sweep_o, trace_o, cal_o;
  auto* ber = app.add_subcommand("ber", "BER vs SNR for one detector");
  add_common(ber, ber_o);
  auto* sweep = app.add_subcommand("sweep-damping", "BER vs message damping factor (MRF)");
  add_common(sweep, sweep_o);
  sweep->add_option("--grid", sweep_o.grid, "alpha_m grid, lo:step:hi");
  auto* trace = app.add_subcommand("trace", "BER vs BP iteration count");
  add_common(trace, trace_o);
  trace->add_option("--max-iters", trace_o.max_iters, "largest iteration count");
  auto* cal = app.add_subcommand("calibrate-theta", "simulate the RTS residual-norm pdf");
  add_common(cal, cal_o);
  cal->add_option("--frames", cal_o.frames, "frames to sample");
  app.add_subcommand("selftest", "run model-equivalence and oracle-agreement checks");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    inject_config(args);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    auto with_preset = [](const CommonOpts& o, auto fn) {
      if (!o.preset.empty()) {
        auto p = find_preset(o.preset);
        if (!p) {
          std::cerr << "error: unknown preset '" << o.preset << "'\n";
          return 2;
        }
        return fn(o, &*p);
      }
      return fn(o, static_cast<const Preset*>(nullptr));
    };
    if (ber->parsed()) return with_preset(ber_o, run_ber);
    if (sweep->parsed()) return with_preset(sweep_o, run_sweep);
    if (trace->parsed()) return with_preset(trace_o, run_trace);
    if (cal->parsed()) return with_preset(cal_o, run_calibrate);
    return run_selftest();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 3;
  }
}
