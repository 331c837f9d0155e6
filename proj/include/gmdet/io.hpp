#pragma once

#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gmdet/sim.hpp"

namespace gmdet {

inline std::string modulation_name(const Modulation& mod) {
  return mod.is_qam() ? std::to_string(mod.M) + "qam" : "bpsk";
}

/// One result row: the BerRecord plus the variant/system columns of the
/// stable CSV schema.
struct ResultRow {
  SystemSpec sys;
  std::string detector;
  double alpha_m = 0.0;
  double alpha_b = 0.0;
  int iters = 0;
  BerRecord rec;
};

inline ResultRow make_row(const SystemSpec& sys, const DetectorVariant& v, const BerRecord& rec) {
  ResultRow row;
  row.sys = sys;
  row.detector = rec.label.empty() ? detector_name(v.id) : rec.label;
  row.alpha_m = v.cfg.alpha_m;
  row.alpha_b = v.cfg.alpha_b;
  row.iters = v.cfg.num_iter;
  row.rec = rec;
  return row;
}

inline const char* csv_header() {
  return "snr_db,detector,n_t,n_r,L,K,modulation,alpha_m,alpha_b,iters,bits,bit_errors,ber,frames,"
         "frame_errors,seed,elapsed_s";
}

inline void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << csv_header() << "\n";
  for (const auto& r : rows) {
    std::ostringstream line;
    line.precision(10);
    line << r.rec.snr_db << ',' << r.detector << ',' << r.sys.n_t << ',' << r.sys.n_r << ','
         << r.sys.L << ',' << r.sys.K << ',' << modulation_name(r.sys.mod) << ',' << r.alpha_m << ','
         << r.alpha_b << ',' << r.iters << ',' << r.rec.bits << ',' << r.rec.bit_errors << ','
         << r.rec.ber() << ',' << r.rec.frames << ',' << r.rec.frame_errors << ',' << r.rec.seed << ','
         << r.rec.elapsed_s;
    os << line.str() << "\n";
  }
}

inline void write_json(std::ostream& os, const std::vector<ResultRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"snr_db", r.rec.snr_db},
                   {"detector", r.detector},
                   {"n_t", r.sys.n_t},
                   {"n_r", r.sys.n_r},
                   {"L", r.sys.L},
                   {"K", r.sys.K},
                   {"modulation", modulation_name(r.sys.mod)},
                   {"alpha_m", r.alpha_m},
                   {"alpha_b", r.alpha_b},
                   {"iters", r.iters},
                   {"bits", r.rec.bits},
                   {"bit_errors", r.rec.bit_errors},
                   {"ber", r.rec.ber()},
                   {"frames", r.rec.frames},
                   {"frame_errors", r.rec.frame_errors},
                   {"seed", r.rec.seed},
                   {"elapsed_s", r.rec.elapsed_s}});
  }
  os << arr.dump(2) << "\n";
}

}  // namespace gmdet
