#pragma once

/// @file fft.hpp
/// @brief Minimal power-of-two FFT and DCT-II/III, enough for the fast
///        constant-coefficient Poisson preconditioner.  Hand-rolled so the
///        only math dependency stays Eigen.

#include <complex>
#include <stdexcept>
#include <vector>

#include "kfsi/types.hpp"

namespace kfsi {

using Cplx = std::complex<Real>;

/// In-place iterative radix-2 FFT (forward for sign = -1, inverse for +1;
/// inverse is unnormalized).
inline void fft_pow2(std::vector<Cplx>& a, int sign) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1))) throw std::invalid_argument("fft: size must be a power of two");
  // bit reversal
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    Real ang = sign * 2 * kPi / static_cast<Real>(len);
    Cplx wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      Cplx w(1);
      for (size_t k = 0; k < len / 2; ++k) {
        Cplx u = a[i + k], v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

/// DCT-II: X_k = sum_j x_j cos(pi k (2j+1) / (2n)), via even/odd reordering
/// and one complex FFT of length n.
inline void dct2_pow2(const Real* x, Real* X, int n, std::vector<Cplx>& work) {
  work.resize(n);
  for (int j = 0; j < n / 2; ++j) {
    work[j] = x[2 * j];
    work[n - 1 - j] = x[2 * j + 1];
  }
  if (n == 1) {
    X[0] = x[0];
    return;
  }
  fft_pow2(work, -1);
  for (int k = 0; k < n; ++k) {
    Real ang = -kPi * k / (2 * n);
    Cplx tw(std::cos(ang), std::sin(ang));
    X[k] = (work[k] * tw).real();
  }
}

/// DCT-III: x_j = X_0/2 + sum_{k>=1} X_k cos(pi k (2j+1) / (2n)); inverse of
/// dct2_pow2 up to the factor 2/n.
inline void dct3_pow2(const Real* X, Real* x, int n, std::vector<Cplx>& work) {
  if (n == 1) {
    x[0] = X[0] / 2;
    return;
  }
  work.resize(n);
  for (int k = 0; k < n; ++k) {
    Real xk = X[k];
    Real xnk = (k == 0) ? 0 : X[n - k];
    Real ang = kPi * k / (2 * n);
    work[k] = Cplx(xk, -xnk) * Cplx(std::cos(ang), std::sin(ang)) / Real(2);
  }
  fft_pow2(work, +1);  // unnormalized inverse
  for (int j = 0; j < n / 2; ++j) {
    x[2 * j] = work[j].real();
    x[2 * j + 1] = work[n - 1 - j].real();
  }
}

}  // namespace kfsi
