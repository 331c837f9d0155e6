#include <catch2/catch_amalgamated.hpp>

#include "gmdet/baselines.hpp"
#include "gmdet/sim.hpp"

using namespace gmdet;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.sys = {2, 2, 1, 2, Modulation::bpsk()};
  spec.det.id = DetectorId::Mrf;
  spec.det.cfg.num_iter = 5;
  spec.det.cfg.alpha_m = 0.2;
  spec.snr_db = {6.0};
  spec.stop = {30, 400};
  spec.seed = 9;
  return spec;
}

bool same_record(const BerRecord& a, const BerRecord& b) {
  return a.bits == b.bits && a.bit_errors == b.bit_errors && a.frames == b.frames &&
         a.frame_errors == b.frame_errors && a.seed == b.seed;
}

}  // namespace

TEST_CASE("results are identical for any worker count") {
  ExperimentSpec spec = small_spec();
  spec.workers = 1;
  auto a = run_ber_experiment(spec);
  spec.workers = 3;
  auto b = run_ber_experiment(spec);
  spec.workers = 8;
  auto c = run_ber_experiment(spec);
  REQUIRE(same_record(a[0], b[0]));
  REQUIRE(same_record(a[0], c[0]));
}

TEST_CASE("stopping rule closes a point after enough errors or the frame cap") {
  ExperimentSpec spec = small_spec();
  spec.det.id = DetectorId::CoinFlip;  // BER 0.5, errors accumulate fast
  spec.stop = {10, 1000};
  auto rec = run_ber_experiment(spec)[0];
  REQUIRE(rec.bit_errors >= 10);
  REQUIRE(rec.frames < 100);  // 4 bits/frame at BER 0.5 closes in a handful of frames
  REQUIRE(rec.bits == rec.frames * bits_per_frame(spec.sys));

  spec.stop = {100000, 25};  // unreachable error target: the cap closes the point
  rec = run_ber_experiment(spec)[0];
  REQUIRE(rec.frames == 25);
}

TEST_CASE("coin-flip detector measures BER one half") {
  ExperimentSpec spec = small_spec();
  spec.det.id = DetectorId::CoinFlip;
  spec.stop = {100000, 2000};
  auto rec = run_ber_experiment(spec)[0];
  REQUIRE(rec.ber() == Catch::Approx(0.5).margin(0.02));
}

TEST_CASE("exact detection on a flat single-antenna channel matches the fading curve") {
  // 1x1, single tap: MAP reduces to the scalar matched filter and the BER
  // averages Q(sqrt(2 |h|^2 gamma)) over |h|^2 ~ Exp(1), which integrates to
  // (1 - sqrt(gamma/(1+gamma)))/2
  ExperimentSpec spec;
  spec.sys = {1, 1, 1, 1, Modulation::bpsk()};
  spec.det.id = DetectorId::MapOracle;
  spec.snr_db = {10.0};
  spec.stop = {150, 40000};
  spec.seed = 13;
  auto rec = run_ber_experiment(spec)[0];
  const double gamma = std::pow(10.0, 1.0);
  const double expect = 0.5 * (1.0 - std::sqrt(gamma / (1.0 + gamma)));
  const double sd = std::sqrt(expect * (1.0 - expect) / rec.bits);
  REQUIRE(std::abs(rec.ber() - expect) < 3.5 * sd);
}

TEST_CASE("damping sweep row at a grid value reproduces the standalone run") {
  ExperimentSpec spec = small_spec();
  std::vector<double> grid = {0.0, 0.2, 0.5};
  auto sweep = sweep_damping(spec, grid);
  REQUIRE(sweep.size() == 3);

  for (size_t i = 0; i < grid.size(); ++i) {
    ExperimentSpec one = spec;
    one.det.cfg.alpha_m = grid[i];
    auto solo = run_ber_experiment(one)[0];
    REQUIRE(solo.bits == sweep[i].bits);
    REQUIRE(solo.bit_errors == sweep[i].bit_errors);
    REQUIRE(solo.frames == sweep[i].frames);
  }
  REQUIRE(sweep[1].label == "mrf_am0.2");
}

TEST_CASE("comparison runs share frames across detectors") {
  ExperimentSpec spec = small_spec();
  std::vector<DetectorVariant> variants(2);
  variants[0].id = DetectorId::Mrf;
  variants[0].cfg.num_iter = 5;
  variants[0].cfg.alpha_m = 0.2;
  variants[1].id = DetectorId::MapOracle;
  StoppingRule stop{1000000, 50};  // cap-limited: both variants see all 50 frames
  auto recs = run_ber_comparison(spec.sys, variants, 8.0, stop, 17);
  REQUIRE(recs.size() == 2);
  REQUIRE(recs[0].frames == 50);
  REQUIRE(recs[1].frames == 50);
  REQUIRE(recs[0].bit_errors >= recs[1].bit_errors);  // exact MAP is at least as good
}

TEST_CASE("convergence trace yields one record per iteration count") {
  ExperimentSpec spec = small_spec();
  spec.stop = {1000000, 40};
  auto recs = convergence_trace(spec, 6);
  REQUIRE(recs.size() == 7);
  for (const auto& r : recs) REQUIRE(r.frames == 40);
  REQUIRE(recs[3].label == "mrf_it3");
  // the final-iteration record equals a standalone run at that iteration count
  ExperimentSpec one = spec;
  one.det.cfg.num_iter = 6;
  auto solo = run_ber_experiment(one)[0];
  REQUIRE(solo.bit_errors == recs[6].bit_errors);
}

TEST_CASE("bit/symbol mapping round-trips for BPSK and 16-QAM") {
  auto rng = make_rng(71);
  for (auto mod : {Modulation::bpsk(), Modulation::qam(16)}) {
    SystemSpec sys{2, 2, 1, 3, mod};
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::uint8_t> bits(bits_per_frame(sys));
      for (auto& b : bits) b = rng() & 1;
      auto x = symbols_from_bits(sys, bits);
      REQUIRE(bits_from_symbols(sys, x) == bits);
      // symbols land on the unit-energy constellation
      auto pts = alphabet_points(mod);
      for (int i = 0; i < x.size(); ++i) {
        double d = 1e9;
        for (auto p : pts) d = std::min(d, std::abs(x[i] - p));
        REQUIRE(d < 1e-12);
      }
    }
  }
}

TEST_CASE("frame generation is deterministic in (seed, point, frame)") {
  SystemSpec sys{2, 2, 2, 4, Modulation::bpsk()};
  auto a = make_frame(sys, 6.0, 42, 1, 7);
  auto b = make_frame(sys, 6.0, 42, 1, 7);
  auto c = make_frame(sys, 6.0, 42, 1, 8);
  REQUIRE((a.model.r - b.model.r).norm() == 0.0);
  REQUIRE(a.bits == b.bits);
  REQUIRE((a.model.r - c.model.r).norm() != 0.0);
}

TEST_CASE("BP detectors reject unsupported alphabets") {
  SystemSpec sys{2, 2, 1, 2, Modulation::qam(16)};
  FrameData f = make_frame(sys, 10.0, 1, 0, 0);
  FrameCache cache;
  DetectorVariant v;
  v.id = DetectorId::Mrf;
  REQUIRE_THROWS(detect_bits(sys, f, v, cache));
  v.id = DetectorId::Rts;
  REQUIRE_NOTHROW(detect_bits(sys, f, v, cache));
}

TEST_CASE("detector names round-trip") {
  for (auto id : {DetectorId::Mrf, DetectorId::Fg, DetectorId::FdMmse, DetectorId::MapOracle,
                  DetectorId::MlOracle, DetectorId::Rts, DetectorId::Hybrid,
                  DetectorId::SelectiveHybrid, DetectorId::CoinFlip}) {
    auto back = detector_from_name(detector_name(id));
    REQUIRE(back.has_value());
    REQUIRE(*back == id);
  }
  REQUIRE_FALSE(detector_from_name("nonsense").has_value());
}
