#pragma once

// FFT magnitude spectra, short-time Fourier transforms, and the tapered
// window used to suppress early-time chirp before spectral analysis.

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "nvmri/dsp.hpp"
#include "nvmri/error.hpp"
#include "nvmri/trace.hpp"

namespace nvmri {

/// One-sided magnitude spectrum |X_k| / N for k = 0 .. N/2; the frequency
/// axis (MHz) has resolution 1 / (N * dt).
inline Trace fft_spectrum(const Trace& tr) {
  tr.validate();
  if (tr.axis_kind != AxisKind::time) throw InvalidArgumentError("FFT needs a time-domain trace");
  const double dt = tr.uniform_step();
  const std::size_t n = tr.size();
  const auto spec = dsp::fft_real(tr.values);
  Trace out;
  out.axis_kind = AxisKind::frequency;
  out.noise_applied = tr.noise_applied;
  out.seed_used = tr.seed_used;
  const std::size_t half = n / 2;
  out.axis.resize(half + 1);
  out.values.resize(half + 1);
  out.sigma.assign(half + 1, 0.0);
  const double df = 1000.0 / (static_cast<double>(n) * dt);
  for (std::size_t k = 0; k <= half; ++k) {
    out.axis[k] = df * static_cast<double>(k);
    out.values[k] = std::abs(spec[k]) / static_cast<double>(n);
  }
  return out;
}

enum class WindowKind { rectangular, hann };

inline std::string to_string(WindowKind k) { return k == WindowKind::hann ? "hann" : "rectangular"; }

inline std::vector<double> make_window(WindowKind kind, std::size_t len) {
  std::vector<double> w(len, 1.0);
  if (kind == WindowKind::hann && len > 1) {
    for (std::size_t i = 0; i < len; ++i) {
      w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                   static_cast<double>(len - 1)));
    }
  }
  return w;
}

/// Sub-bin peak location by fitting a parabola through three samples.
inline double parabolic_offset(double left, double mid, double right) {
  const double denom = left - 2.0 * mid + right;
  if (std::abs(denom) < 1e-300) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

struct StftMap {
  std::vector<double> time_bins_ns;
  std::vector<double> frequency_bins_mhz;
  /// magnitude[time_bin][frequency_bin]
  std::vector<std::vector<double>> magnitude;
  WindowKind window_kind = WindowKind::hann;
  std::size_t window_length = 0;

  /// Peak frequency per time bin, excluding DC, parabolically interpolated.
  std::vector<double> ridge() const {
    std::vector<double> out;
    out.reserve(magnitude.size());
    const double df = frequency_bins_mhz.size() > 1 ? frequency_bins_mhz[1] : 0.0;
    for (const auto& row : magnitude) {
      std::size_t best = 1;
      for (std::size_t k = 1; k < row.size(); ++k) {
        if (row[k] > row[best]) best = k;
      }
      double f = frequency_bins_mhz[best];
      if (best > 0 && best + 1 < row.size()) {
        f += df * parabolic_offset(row[best - 1], row[best], row[best + 1]);
      }
      out.push_back(f);
    }
    return out;
  }
};

/// Short-time Fourier transform. Each segment has its mean removed, is
/// windowed and zero-padded to `nfft` (0 picks 4x the next power of two).
inline StftMap stft(const Trace& tr, WindowKind kind, std::size_t window_len, std::size_t hop,
                    std::size_t nfft = 0) {
  tr.validate();
  if (tr.axis_kind != AxisKind::time) throw InvalidArgumentError("STFT needs a time-domain trace");
  if (hop < 1) throw InvalidArgumentError("STFT hop must be >= 1");
  if (window_len < 2) throw InvalidArgumentError("STFT window must span at least two samples");
  if (window_len > tr.size()) throw WindowTooLongError("STFT window longer than the trace");
  const double dt = tr.uniform_step();
  if (nfft == 0) nfft = 4 * std::bit_ceil(window_len);
  nfft = std::max(nfft, window_len);

  StftMap map;
  map.window_kind = kind;
  map.window_length = window_len;
  const auto win = make_window(kind, window_len);
  const std::size_t half = nfft / 2;
  const double df = 1000.0 / (static_cast<double>(nfft) * dt);
  for (std::size_t k = 0; k <= half; ++k) map.frequency_bins_mhz.push_back(df * static_cast<double>(k));

  std::vector<double> seg(window_len);
  for (std::size_t start = 0; start + window_len <= tr.size(); start += hop) {
    double mean = 0.0;
    for (std::size_t i = 0; i < window_len; ++i) mean += tr.values[start + i];
    mean /= static_cast<double>(window_len);
    for (std::size_t i = 0; i < window_len; ++i) seg[i] = (tr.values[start + i] - mean) * win[i];
    const auto spec = dsp::fft_real(seg, nfft);
    std::vector<double> row(half + 1);
    for (std::size_t k = 0; k <= half; ++k) row[k] = std::abs(spec[k]);
    map.magnitude.push_back(std::move(row));
    map.time_bins_ns.push_back(0.5 * (tr.axis[start] + tr.axis[start + window_len - 1]));
  }
  return map;
}

/// Raised-cosine ramp from 0 to 1 over the first `chirp_extent_ns` of the
/// trace, multiplied into the values and recorded in `window`.
inline Trace compensate_chirp(const Trace& tr, double chirp_extent_ns) {
  tr.validate();
  if (chirp_extent_ns < 0.0) throw InvalidArgumentError("chirp extent must be >= 0");
  if (tr.size() == 0) return tr;
  const double span = tr.axis.back() - tr.axis.front();
  if (chirp_extent_ns >= span) throw InvalidArgumentError("chirp extent must be shorter than the trace");
  Trace out = tr;
  if (chirp_extent_ns == 0.0) return out;
  if (out.window.empty()) out.window.assign(out.size(), 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double t = out.axis[i] - out.axis.front();
    if (t >= chirp_extent_ns) break;
    const double w = 0.5 * (1.0 - std::cos(std::numbers::pi * t / chirp_extent_ns));
    out.values[i] *= w;
    if (!out.sigma.empty()) out.sigma[i] *= w;
    out.window[i] *= w;
  }
  return out;
}

}  // namespace nvmri
