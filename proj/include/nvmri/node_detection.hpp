#pragma once

// First beat node of a multi-tone trace, located on the smoothed magnitude of
// the analytic signal.

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "nvmri/dsp.hpp"
#include "nvmri/error.hpp"
#include "nvmri/spectral.hpp"
#include "nvmri/trace.hpp"

namespace nvmri {

struct NodeDetectionOptions {
  /// Envelope smoothing length (ns); 0 uses two periods of the dominant tone.
  double smoothing_ns = 0.0;
  /// Fraction of the trace at each end excluded from the search (Hilbert edge effects).
  double edge_guard_fraction = 0.05;
  /// A node must dip below this fraction of the envelope maximum before it.
  double depth_ratio = 0.5;
  /// Required recovery after the node, in units of the envelope noise.
  double rise_sigmas = 3.0;
  /// Required recovery after the node, as a fraction of the node depth.
  double rise_fraction = 0.5;
  /// Required recovery after the node, as a fraction of the envelope maximum before it.
  double recovery_fraction = 0.02;
};

/// Smoothed envelope of the mean-removed trace. With a carrier frequency the
/// analytic signal is shifted to baseband before smoothing, so noise averages
/// down instead of piling up as a magnitude bias at the node. Components far
/// from the carrier (more than about half of it away) are suppressed.
inline std::vector<double> beat_envelope(const Trace& tr, double smoothing_ns, double carrier_mhz = 0.0) {
  const double dt = tr.uniform_step();
  std::vector<double> x(tr.values);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (double& v : x) v -= mean;
  auto z = dsp::analytic_signal(x, std::bit_ceil(2 * x.size()));
  if (carrier_mhz > 0.0) {
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double ph = -2.0 * std::numbers::pi * carrier_mhz * 1e-3 * (tr.axis[i] - tr.axis[0]);
      z[i] *= dsp::cplx(std::cos(ph), std::sin(ph));
    }
  }

  const auto half = static_cast<std::size_t>(std::max(0.0, std::round(0.5 * smoothing_ns / dt)));
  std::vector<double> out(z.size());
  if (half == 0) {
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::abs(z[i]);
    return out;
  }
  // Baseband averages are complex; plain magnitude envelopes are averaged as magnitudes.
  std::vector<dsp::cplx> prefix(z.size() + 1, 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    prefix[i + 1] = prefix[i] + (carrier_mhz > 0.0 ? z[i] : dsp::cplx(std::abs(z[i]), 0.0));
  }
  for (std::size_t i = 0; i < z.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(z.size() - 1, i + half);
    out[i] = std::abs(prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// Time (ns) of the first envelope minimum. std::nullopt is the "no node in
/// this window" verdict, i.e. the tones are not resolved.
inline std::optional<double> detect_first_node(const Trace& tr, const NodeDetectionOptions& opt = {}) {
  tr.validate();
  if (tr.axis_kind != AxisKind::time) throw InvalidArgumentError("node detection needs a time trace");
  const double dt = tr.uniform_step();
  const std::size_t n = tr.size();
  if (n < 8) return std::nullopt;

  const auto spec = fft_spectrum(tr);
  std::size_t best = 1;
  for (std::size_t k = 1; k < spec.size(); ++k) {
    if (spec.values[k] > spec.values[best]) best = k;
  }
  double carrier = spec.axis[best];
  if (best + 1 < spec.size()) {
    carrier += spec.axis[1] * parabolic_offset(spec.values[best - 1], spec.values[best], spec.values[best + 1]);
  }
  const double smoothing = opt.smoothing_ns > 0.0 ? opt.smoothing_ns : 2.0 * 1000.0 / std::max(carrier, 1e-9);
  const auto env = beat_envelope(tr, smoothing, carrier);
  const auto half = static_cast<std::size_t>(std::max(1.0, std::round(0.5 * smoothing / dt)));

  double sigma_point = 0.0;
  if (tr.noise_applied && !tr.sigma.empty()) {
    std::vector<double> s(tr.sigma);
    std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(s.size() / 2), s.end());
    sigma_point = s[s.size() / 2];
  }
  const double sigma_env = 1.5 * sigma_point / std::sqrt(static_cast<double>(2 * half + 1));

  const auto guard = static_cast<std::size_t>(std::ceil(opt.edge_guard_fraction * static_cast<double>(n)));
  const std::size_t lo = std::max<std::size_t>(guard, 1);
  const std::size_t hi = n - std::max<std::size_t>(guard, 1);
  double max_before = 0.0;
  for (std::size_t i = 0; i < lo; ++i) max_before = std::max(max_before, env[i]);

  for (std::size_t i = lo; i < hi; ++i) {
    max_before = std::max(max_before, env[i]);
    const std::size_t a = i >= half ? i - half : 0;
    const std::size_t b = std::min(n - 1, i + half);
    bool local_min = true;
    for (std::size_t j = a; j <= b && local_min; ++j) {
      if (env[j] < env[i]) local_min = false;
    }
    if (!local_min || env[i] > opt.depth_ratio * max_before) continue;
    // Prominence: the envelope must recover by `needed` before it drops
    // below this point again (a wiggle on the way down is not a node). The
    // recovery may be confirmed up to the end of the record.
    const double needed = std::max({opt.recovery_fraction * max_before, opt.rise_fraction * env[i], opt.rise_sigmas * sigma_env});
    bool recovered = false;
    for (std::size_t j = i + 1; j < n && !recovered; ++j) {
      if (env[j] < env[i]) break;
      recovered = env[j] - env[i] >= needed;
    }
    if (!recovered) continue;
    const double off = parabolic_offset(env[i - 1], env[i], env[i + 1]);
    return tr.axis[i] + off * dt;
  }
  return std::nullopt;
}

}  // namespace nvmri
