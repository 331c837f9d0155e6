#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace gmdet {

/// Symbol alphabet descriptor. BPSK, or square M-QAM (M a power of 4, so each
/// real dimension carries an M'-PAM with M' = sqrt(M)). All alphabets are
/// scaled to unit average symbol energy.
struct Modulation {
  enum class Kind { Bpsk, Qam };
  Kind kind = Kind::Bpsk;
  int M = 2;  // constellation size (2 for BPSK)

  static Modulation bpsk() { return {Kind::Bpsk, 2}; }
  static Modulation qam(int M) {
    if (M < 4) throw std::invalid_argument("qam: M must be >= 4");
    int mp = static_cast<int>(std::lround(std::sqrt(static_cast<double>(M))));
    if (mp * mp != M || (mp & (mp - 1)) != 0)
      throw std::invalid_argument("qam: M must be a power of 4 (square QAM)");
    return {Kind::Qam, M};
  }

  bool is_qam() const { return kind == Kind::Qam; }
  /// PAM order per real dimension (M' = sqrt(M) for QAM, 2 for BPSK).
  int pam_order() const { return is_qam() ? static_cast<int>(std::lround(std::sqrt(double(M)))) : 2; }
  /// Bit layers per real dimension, N = log2(M').
  int layers() const {
    int n = 0;
    for (int m = pam_order(); m > 1; m >>= 1) ++n;
    return n;
  }
  int bits_per_symbol() const { return is_qam() ? 2 * layers() : 1; }
  /// Scale mapping the unnormalized lattice {+-1,+-3,...} to unit average
  /// symbol energy. BPSK symbols are real +-1.
  double scale() const {
    if (!is_qam()) return 1.0;
    const double mp = pam_order();
    return std::sqrt(3.0 / (2.0 * (mp * mp - 1.0)));
  }
  /// Normalized PAM points per real dimension, ascending.
  std::vector<double> pam_points() const {
    const int mp = pam_order();
    std::vector<double> pts(mp);
    for (int q = 0; q < mp; ++q) pts[q] = scale() * (2 * q - (mp - 1));
    return pts;
  }
};

/// +-1 layer expansion of an unnormalized PAM point: x = sum_j 2^j b_j,
/// b_j in {+-1}, N layers for a 2^N-PAM lattice.
inline std::vector<int> bit_expand(int x, int layers) {
  const int mp = 1 << layers;
  if (x < -(mp - 1) || x > (mp - 1) || ((x + mp - 1) & 1) != 0)
    throw std::domain_error("bit_expand: value off the PAM lattice");
  const int u = (x + mp - 1) / 2;  // 0..mp-1
  std::vector<int> b(layers);
  for (int j = 0; j < layers; ++j) b[j] = ((u >> j) & 1) ? +1 : -1;
  return b;
}

inline int bit_reconstruct(const std::vector<int>& b) {
  int x = 0;
  for (size_t j = 0; j < b.size(); ++j) x += (1 << j) * b[j];
  return x;
}

/// Nearest point of the unnormalized 2^N-PAM lattice.
inline int quantize_pam(double v, int layers) {
  const int mp = 1 << layers;
  int q = static_cast<int>(std::lround((v + (mp - 1)) / 2.0));
  q = std::max(0, std::min(mp - 1, q));
  return 2 * q - (mp - 1);
}

/// Complex alphabet as an explicit point list (for enumeration oracles).
inline std::vector<std::complex<double>> alphabet_points(const Modulation& mod) {
  std::vector<std::complex<double>> pts;
  if (!mod.is_qam()) {
    pts = {{-1.0, 0.0}, {+1.0, 0.0}};
    return pts;
  }
  const auto pam = mod.pam_points();
  for (double re : pam)
    for (double im : pam) pts.emplace_back(re, im);
  return pts;
}

}  // namespace gmdet
