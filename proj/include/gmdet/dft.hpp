#pragma once

#include <Eigen/Dense>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace gmdet {

using cplx = std::complex<double>;

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

namespace detail {

// In-place iterative radix-2 Cooley-Tukey. sign = -1 forward, +1 inverse.
inline void fft_radix2(Eigen::VectorXcd& a, int sign) {
  const int n = static_cast<int>(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / len;
    const cplx wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        cplx u = a[i + k];
        cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

inline Eigen::VectorXcd dft_dense(const Eigen::VectorXcd& a, int sign) {
  const int n = static_cast<int>(a.size());
  Eigen::VectorXcd out(n);
  for (int i = 0; i < n; ++i) {
    cplx acc(0.0, 0.0);
    for (int q = 0; q < n; ++q) {
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(q) * i / n;
      acc += a[q] * cplx(std::cos(ang), std::sin(ang));
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace detail

/// Unitary K-point DFT, (1/sqrt(K)) sum_q e^{-2*pi*j*q*i/K} a_q.
/// Radix-2 FFT when K is a power of two, dense sum otherwise.
inline Eigen::VectorXcd unitary_dft(const Eigen::VectorXcd& a, bool inverse = false) {
  const int n = static_cast<int>(a.size());
  if (n == 0) throw std::invalid_argument("unitary_dft: empty input");
  const int sign = inverse ? +1 : -1;
  Eigen::VectorXcd out;
  if (is_pow2(n)) {
    out = a;
    detail::fft_radix2(out, sign);
  } else {
    out = detail::dft_dense(a, sign);
  }
  return out / std::sqrt(static_cast<double>(n));
}

/// Dense reference transform, used as an independent route for cross-checks.
inline Eigen::VectorXcd unitary_dft_dense(const Eigen::VectorXcd& a, bool inverse = false) {
  return detail::dft_dense(a, inverse ? +1 : -1) / std::sqrt(static_cast<double>(a.size()));
}

}  // namespace gmdet
