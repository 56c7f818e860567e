#pragma once

// Multi-tone sinusoid fitting by variable projection: frequencies (and decay
// rates) are nonlinear parameters driven by Levenberg-Marquardt, while offset,
// amplitudes and phases are solved exactly by linear least squares at every
// step. Starts come from the zero-padded FFT.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "nvmri/dsp.hpp"
#include "nvmri/error.hpp"
#include "nvmri/least_squares.hpp"
#include "nvmri/spectral.hpp"
#include "nvmri/trace.hpp"

namespace nvmri {

enum class DecayShape { exponential, gaussian };

struct SinusoidTone {
  double frequency_mhz = 0.0;
  double amplitude = 0.0;
  double phase_rad = 0.0;
  /// Envelope rate (1/ns): exp(-d t) or exp(-(d t)^2) depending on shape.
  double decay_per_ns = 0.0;
};

struct SinusoidFit {
  /// Sorted by descending frequency (NV1 first).
  std::vector<SinusoidTone> tones;
  double offset = 0.0;
  double residual_rms = 0.0;
  bool converged = false;
  int starts_tried = 0;
};

struct SinusoidFitOptions {
  /// When > 0, traces shorter than half the corresponding beat period are rejected.
  double expected_min_separation_mhz = 0.0;
  DecayShape decay_shape = DecayShape::exponential;
  LmOptions lm{};
};

namespace detail {

struct SinusoidProblem {
  std::vector<double> t;   // ns
  std::vector<double> y;   // windowed data
  std::vector<double> w;   // window
  int n_tones = 0;
  bool with_decay = false;
  DecayShape shape = DecayShape::exponential;

  Eigen::MatrixXd basis(const Eigen::VectorXd& p) const {
    const auto m = static_cast<Eigen::Index>(t.size());
    Eigen::MatrixXd b(m, 1 + 2 * n_tones);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double ti = t[static_cast<std::size_t>(i)];
      const double wi = w[static_cast<std::size_t>(i)];
      b(i, 0) = wi;
      for (int k = 0; k < n_tones; ++k) {
        const double ph = 2.0 * std::numbers::pi * p(k) * 1e-3 * ti;
        double env = 1.0;
        if (with_decay) {
          const double d = std::abs(p(n_tones + k));
          env = shape == DecayShape::exponential ? std::exp(-d * ti) : std::exp(-(d * ti) * (d * ti));
        }
        b(i, 1 + 2 * k) = wi * env * std::cos(ph);
        b(i, 2 + 2 * k) = wi * env * std::sin(ph);
      }
    }
    return b;
  }

  Eigen::VectorXd coefficients(const Eigen::MatrixXd& b) const {
    const Eigen::Map<const Eigen::VectorXd> yy(y.data(), static_cast<Eigen::Index>(y.size()));
    return b.colPivHouseholderQr().solve(yy);
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& p) const {
    const Eigen::MatrixXd b = basis(p);
    const Eigen::Map<const Eigen::VectorXd> yy(y.data(), static_cast<Eigen::Index>(y.size()));
    return yy - b * coefficients(b);
  }
};

/// Local maxima of a magnitude spectrum, strongest first, as (freq, mag).
inline std::vector<std::pair<double, double>> spectral_peaks(const std::vector<double>& mag,
                                                             double df, double rel_threshold) {
  std::vector<std::pair<double, double>> peaks;
  double top = 0.0;
  for (std::size_t k = 1; k < mag.size(); ++k) top = std::max(top, mag[k]);
  for (std::size_t k = 1; k + 1 < mag.size(); ++k) {
    if (mag[k] > mag[k - 1] && mag[k] >= mag[k + 1] && mag[k] >= rel_threshold * top) {
      const double off = parabolic_offset(mag[k - 1], mag[k], mag[k + 1]);
      peaks.emplace_back(df * (static_cast<double>(k) + off), mag[k]);
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return peaks;
}

/// Deterministic start grid: resolved peaks, each peak nudged by +-half a
/// bin, and unresolved clusters split symmetrically around a peak.
inline std::vector<std::vector<double>> tone_starts(const std::vector<std::pair<double, double>>& peaks,
                                                    int n_tones, double bin) {
  std::vector<double> base;
  for (const auto& [f, m] : peaks) {
    if (static_cast<int>(base.size()) == n_tones) break;
    const bool distinct = std::all_of(base.begin(), base.end(),
                                      [&](double b) { return std::abs(b - f) >= 0.75 * bin; });
    if (distinct) base.push_back(f);
  }
  if (base.empty()) base.push_back(bin);

  std::vector<std::vector<double>> starts;
  // Split one anchor of `kept` into a symmetric cluster that fills the missing tones.
  auto add_splits = [&](const std::vector<double>& kept) {
    const int missing = n_tones - static_cast<int>(kept.size());
    const std::size_t anchors = std::min<std::size_t>(kept.size(), 3);
    for (std::size_t j = 0; j < anchors; ++j) {
      for (double spread : {0.3, 0.6, 1.0}) {
        std::vector<double> st;
        for (std::size_t i = 0; i < kept.size(); ++i) {
          if (i != j) st.push_back(kept[i]);
        }
        const int cluster = missing + 1;
        for (int c = 0; c < cluster; ++c) {
          const double frac = cluster == 1 ? 0.0 : -1.0 + 2.0 * c / (cluster - 1);
          st.push_back(kept[j] + frac * spread * bin);
        }
        starts.push_back(st);
      }
    }
  };
  if (static_cast<int>(base.size()) == n_tones) {
    starts.push_back(base);
    for (std::size_t j = 0; j < base.size(); ++j) {
      for (double s : {-0.5, 0.5}) {
        auto st = base;
        st[j] += s * bin;
        starts.push_back(st);
      }
    }
    // The weakest "resolved" peak may be noise while a real pair hides in one bin.
    if (base.size() >= 2) add_splits(std::vector<double>(base.begin(), base.end() - 1));
  } else {
    add_splits(base);
  }
  for (auto& st : starts) {
    for (auto& f : st) f = std::max(f, 0.05 * bin);
  }
  return starts;
}

}  // namespace detail

/// Fit offset + sum_k a_k cos(2 pi f_k t + phi_k) [x envelope] to a time trace.
inline SinusoidFit fit_sinusoids(const Trace& tr, int n_tones, bool with_decay,
                                 const SinusoidFitOptions& opt = {}) {
  tr.validate();
  if (tr.axis_kind != AxisKind::time) throw InvalidArgumentError("sinusoid fit needs a time trace");
  if (n_tones < 1) throw InvalidArgumentError("n_tones must be >= 1");
  const std::size_t n_params = 1 + 2 * static_cast<std::size_t>(n_tones) * (with_decay ? 2 : 1);
  if (tr.size() < n_params + 2) throw InvalidArgumentError("trace too short for the requested model");
  const double dt = tr.uniform_step();
  const double span_ns = dt * static_cast<double>(tr.size());
  if (opt.expected_min_separation_mhz > 0.0 &&
      span_ns < 1000.0 / (2.0 * opt.expected_min_separation_mhz)) {
    throw UnderspecifiedWindowError("trace shorter than half the expected beat period");
  }

  detail::SinusoidProblem prob;
  prob.t = tr.axis;
  prob.y = tr.values;
  prob.w.resize(tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) prob.w[i] = tr.window_at(i);
  prob.n_tones = n_tones;
  prob.with_decay = with_decay;
  prob.shape = opt.decay_shape;

  // Seeds from a Hann-windowed, 8x zero-padded spectrum of the mean-removed trace.
  std::vector<double> centered(tr.values);
  double mean = 0.0;
  for (double v : centered) mean += v;
  mean /= static_cast<double>(centered.size());
  const auto hann = make_window(WindowKind::hann, centered.size());
  for (std::size_t i = 0; i < centered.size(); ++i) centered[i] = (centered[i] - mean) * hann[i];
  const std::size_t nfft = 8 * std::bit_ceil(centered.size());
  const auto spec = dsp::fft_real(centered, nfft);
  std::vector<double> mag(nfft / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(spec[k]);
  const double bin = 1000.0 / span_ns;
  const auto peaks = detail::spectral_peaks(mag, 1000.0 / (static_cast<double>(nfft) * dt), 0.05);
  const auto starts = detail::tone_starts(peaks, n_tones, bin);

  const auto np = static_cast<Eigen::Index>(n_tones * (with_decay ? 2 : 1));
  Eigen::VectorXd scale(np);
  for (int k = 0; k < n_tones; ++k) scale(k) = bin;
  if (with_decay) {
    for (int k = 0; k < n_tones; ++k) scale(n_tones + k) = 1.0 / span_ns;
  }
  const ResidualFn fn = [&prob](const Eigen::VectorXd& p) { return prob.residual(p); };

  LmResult best;
  int tried = 0;
  for (const auto& st : starts) {
    Eigen::VectorXd x0(np);
    for (int k = 0; k < n_tones; ++k) x0(k) = st[static_cast<std::size_t>(k)];
    if (with_decay) {
      for (int k = 0; k < n_tones; ++k) x0(n_tones + k) = 0.5 / span_ns;
    }
    LmResult r = levenberg_marquardt(fn, x0, scale, opt.lm);
    ++tried;
    if (r.cost < best.cost) best = std::move(r);
  }
  if (!best.converged) {
    throw NonConvergenceError("sinusoid fit did not converge",
                              std::vector<double>(best.parameters.data(),
                                                  best.parameters.data() + best.parameters.size()),
                              best.cost);
  }

  const Eigen::MatrixXd b = prob.basis(best.parameters);
  const Eigen::VectorXd c = prob.coefficients(b);
  SinusoidFit fit;
  fit.offset = c(0);
  fit.converged = true;
  fit.starts_tried = tried;
  fit.residual_rms = std::sqrt(2.0 * best.cost / static_cast<double>(tr.size()));
  for (int k = 0; k < n_tones; ++k) {
    SinusoidTone tone;
    const double cc = c(1 + 2 * k);
    const double cs = c(2 + 2 * k);
    double f = best.parameters(k);
    double phase = std::atan2(-cs, cc);
    if (f < 0.0) {
      f = -f;
      phase = -phase;
    }
    tone.frequency_mhz = f;
    tone.amplitude = std::hypot(cc, cs);
    tone.phase_rad = phase;
    tone.decay_per_ns = with_decay ? std::abs(best.parameters(n_tones + k)) : 0.0;
    fit.tones.push_back(tone);
  }
  std::sort(fit.tones.begin(), fit.tones.end(),
            [](const SinusoidTone& a, const SinusoidTone& b) { return a.frequency_mhz > b.frequency_mhz; });
  return fit;
}

/// Residual ratio rms(n_tones) / rms(n_tones + 1); large values mean the
/// lower-order model is missing a component.
inline double model_order_ratio(const Trace& tr, int n_tones, bool with_decay,
                                const SinusoidFitOptions& opt = {}) {
  const double lower = fit_sinusoids(tr, n_tones, with_decay, opt).residual_rms;
  const double upper = fit_sinusoids(tr, n_tones + 1, with_decay, opt).residual_rms;
  return lower / std::max(upper, 1e-300);
}

}  // namespace nvmri
