#pragma once

// Discrete Fourier transforms: iterative radix-2 for power-of-two lengths,
// Bluestein's chirp-z for everything else.

#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace nvmri::dsp {

using cplx = std::complex<double>;

namespace detail {

inline void fft_radix2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cplx u = a[i + k];
        const cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

inline void fft_bluestein(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  const std::size_t m = std::bit_ceil(2 * n - 1);
  const double sgn = inverse ? 1.0 : -1.0;
  std::vector<cplx> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small for long transforms.
    const auto k2 = static_cast<double>((k * k) % (2 * n));
    const double ang = sgn * std::numbers::pi * k2 / static_cast<double>(n);
    chirp[k] = cplx(std::cos(ang), std::sin(ang));
  }
  std::vector<cplx> x(m), y(m);
  for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
  y[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) y[k] = y[m - k] = std::conj(chirp[k]);
  fft_radix2(x, false);
  fft_radix2(y, false);
  for (std::size_t k = 0; k < m; ++k) x[k] *= y[k];
  fft_radix2(x, true);
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] / static_cast<double>(m) * chirp[k];
}

}  // namespace detail

/// Unnormalized DFT, X_k = sum_n x_n exp(-+ 2 pi i k n / N). The inverse is
/// not scaled by 1/N.
inline std::vector<cplx> fft(std::vector<cplx> a, bool inverse = false) {
  if (a.size() <= 1) return a;
  if (std::has_single_bit(a.size())) {
    detail::fft_radix2(a, inverse);
  } else {
    detail::fft_bluestein(a, inverse);
  }
  return a;
}

inline std::vector<cplx> fft_real(std::span<const double> x, std::size_t padded_len = 0) {
  std::vector<cplx> a(std::max(padded_len, x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i];
  return fft(std::move(a));
}

/// Analytic signal x + i H[x], built spectrally. A padded length > N
/// suppresses circular wrap-around between the two ends of the record.
inline std::vector<cplx> analytic_signal(std::span<const double> x, std::size_t padded_len = 0) {
  const std::size_t n = std::max(padded_len, x.size());
  auto spec = fft_real(x, n);
  if (n == 0) return spec;
  for (std::size_t k = 1; k < n; ++k) {
    if (2 * k < n) {
      spec[k] *= 2.0;
    } else if (2 * k > n) {
      spec[k] = 0.0;
    }
  }
  auto out = fft(std::move(spec), true);
  out.resize(x.size());
  for (auto& v : out) v /= static_cast<double>(n);
  return out;
}

}  // namespace nvmri::dsp
