#pragma once

// Forward models for the four measurement modalities: CW-ESR spectra, ESEEM
// echo modulation vs gradient on-time, Rabi nutation, and photon antibunching.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nvmri/error.hpp"
#include "nvmri/field_model.hpp"
#include "nvmri/rng.hpp"
#include "nvmri/scene.hpp"
#include "nvmri/spin_model.hpp"
#include "nvmri/trace.hpp"

namespace nvmri {

/// How gradient-wire fields map onto the driven m_s = 0 -> +1 line.
enum class TransitionModel {
  /// Diagonalize the full Hamiltonian in the vector sum of bias and wire field.
  full,
  /// Bias handled exactly, wire field through its axial projection only.
  secular,
};

/// Instantaneous-frequency ramp from `depth_mhz` at t = 0 down to zero at
/// t = duration_ns, shared by every NV.
struct ChirpArtifact {
  double duration_ns = 0.0;
  double depth_mhz = 0.0;

  /// Accumulated chirp phase at time t (rad).
  double phase(double t_ns) const {
    if (duration_ns <= 0.0) return 0.0;
    const double t = std::min(t_ns, duration_ns);
    return 2.0 * std::numbers::pi * depth_mhz * 1e-3 * (t - t * t / (2.0 * duration_ns));
  }

  /// Instantaneous frequency deviation at time t (MHz).
  double deviation(double t_ns) const {
    if (duration_ns <= 0.0 || t_ns >= duration_ns) return 0.0;
    return depth_mhz * (1.0 - t_ns / duration_ns);
  }
};

struct SimulationOptions {
  bool noise = true;
  /// Noise stream; give each sweep point its own stream.
  std::uint32_t stream = 0;
  TransitionModel model = TransitionModel::full;
};

/// Duration of the MW pi pulse bounding the ESEEM excitation bandwidth (ns).
inline constexpr double kEseemPiPulseNs = 50.0;

namespace detail {

inline double unit_lorentzian(double f, double center, double fwhm) {
  const double x = 2.0 * (f - center) / fwhm;
  return 1.0 / (1.0 + x * x);
}

inline double f_plus_bias_only(const Scene& s) {
  return transition_frequencies_full(s.constants, s.bias.vector()).f_plus;
}

/// Shot noise on a spin-signal trace whose full-scale value is `full_scale`.
inline void apply_spin_readout_noise(Trace& tr, const ReadoutModel& ro, double full_scale,
                                     std::uint32_t stream) {
  CounterEngine eng(ro.rng_seed, stream, 0);
  const double n = ro.mean_counts_per_point;
  for (std::size_t i = 0; i < tr.values.size(); ++i) {
    const double p_dark = std::clamp(0.5 * (1.0 - tr.values[i] / full_scale), 0.0, 1.0);
    const double fl = 1.0 - ro.contrast * p_dark;
    const double counts = static_cast<double>(poisson(eng, n * fl));
    tr.values[i] = full_scale * (1.0 - 2.0 * (1.0 - counts / n) / ro.contrast);
    tr.sigma[i] = full_scale * 2.0 * std::sqrt(fl / n) / ro.contrast;
  }
  tr.noise_applied = true;
  tr.seed_used = ro.rng_seed;
}

}  // namespace detail

/// Driven-line (0 -> +1) frequency of every NV at a DC gradient current (MHz).
inline std::vector<double> cw_esr_line_centers(const Scene& s, double dc_current_a,
                                               TransitionModel model) {
  s.validate();
  WireSpec wire = s.dc_wire;
  wire.current_a = dc_current_a;
  const double base = detail::f_plus_bias_only(s);
  std::vector<double> out;
  out.reserve(s.nvs.size());
  for (const auto& nv : s.nvs) {
    const ProbePoint p = dc_probe(s, nv);
    if (model == TransitionModel::secular) {
      out.push_back(base + s.constants.gamma_mhz_per_gauss * axial_projection(wire, p));
    } else {
      const WireSpec wires[] = {wire};
      out.push_back(transition_frequencies_full(s.constants, total_field(s.bias, wires, p)).f_plus);
    }
  }
  return out;
}

/// Fluorescence spectrum 1 - contrast * sum_i w_i L(f; f_i, linewidth + extra).
inline Trace simulate_cw_esr(const Scene& s, std::span<const double> freq_grid_mhz,
                             double dc_current_a, double linewidth_mhz,
                             double extra_broadening_mhz, const SimulationOptions& opt = {}) {
  if (freq_grid_mhz.empty()) throw EmptyGridError("CW-ESR frequency grid is empty");
  const double fwhm = linewidth_mhz + extra_broadening_mhz;
  if (!(fwhm > 0.0)) throw InvalidArgumentError("linewidth must be positive");
  const auto centers = cw_esr_line_centers(s, dc_current_a, opt.model);

  Trace tr;
  tr.axis_kind = AxisKind::frequency;
  tr.axis.assign(freq_grid_mhz.begin(), freq_grid_mhz.end());
  tr.values.resize(tr.axis.size());
  tr.sigma.assign(tr.axis.size(), 0.0);
  for (std::size_t k = 0; k < tr.axis.size(); ++k) {
    double dip = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      dip += s.nvs[i].weight * detail::unit_lorentzian(tr.axis[k], centers[i], fwhm);
    }
    tr.values[k] = 1.0 - s.readout.contrast * dip;
  }
  tr.validate();

  const double lo = *std::min_element(centers.begin(), centers.end()) - 5.0 * fwhm;
  const double hi = *std::max_element(centers.begin(), centers.end()) + 5.0 * fwhm;
  if (tr.axis.front() > lo || tr.axis.back() < hi) {
    tr.warnings.emplace_back("frequency grid does not cover every line +-5 linewidths");
  }

  if (opt.noise) {
    CounterEngine eng(s.readout.rng_seed, opt.stream, 0);
    const double n = s.readout.mean_counts_per_point;
    for (std::size_t k = 0; k < tr.values.size(); ++k) {
      const double fl = std::max(tr.values[k], 0.0);
      tr.values[k] = static_cast<double>(poisson(eng, n * fl)) / n;
      tr.sigma[k] = std::sqrt(fl / n);
    }
    tr.noise_applied = true;
    tr.seed_used = s.readout.rng_seed;
  }
  return tr;
}

/// Gradient-induced shift of each NV's driven line relative to zero current
/// (MHz, signed). These are the ESEEM modulation tones.
inline std::vector<double> eseem_tone_frequencies(const Scene& s, double dc_current_a,
                                                  TransitionModel model) {
  const auto with = cw_esr_line_centers(s, dc_current_a, model);
  const double base = detail::f_plus_bias_only(s);
  std::vector<double> out(with.size());
  for (std::size_t i = 0; i < with.size(); ++i) out[i] = with[i] - base;
  return out;
}

/// Echo amplitude vs gradient on-time: sum_i w_i cos(2 pi df_i t + phi_chirp(t)).
inline Trace simulate_eseem(const Scene& s, double dc_current_a,
                            std::span<const double> gradient_on_times_ns,
                            const std::optional<ChirpArtifact>& chirp = std::nullopt,
                            const SimulationOptions& opt = {}) {
  if (gradient_on_times_ns.empty()) throw EmptyGridError("ESEEM time grid is empty");
  if (chirp && chirp->duration_ns < 0.0) throw InvalidArgumentError("chirp duration must be >= 0");
  const auto tones = eseem_tone_frequencies(s, dc_current_a, opt.model);

  Trace tr;
  tr.axis_kind = AxisKind::time;
  tr.axis.assign(gradient_on_times_ns.begin(), gradient_on_times_ns.end());
  tr.values.resize(tr.axis.size());
  tr.sigma.assign(tr.axis.size(), 0.0);
  for (std::size_t k = 0; k < tr.axis.size(); ++k) {
    const double t = tr.axis[k];
    const double extra = chirp ? chirp->phase(t) : 0.0;
    double echo = 0.0;
    for (std::size_t i = 0; i < tones.size(); ++i) {
      echo += s.nvs[i].weight * std::cos(2.0 * std::numbers::pi * tones[i] * 1e-3 * t + extra);
    }
    tr.values[k] = echo;
  }
  tr.validate();

  const auto [lo, hi] = std::minmax_element(tones.begin(), tones.end());
  const double bandwidth = 1.0 / (kEseemPiPulseNs * 1e-3);
  if (*hi - *lo > 0.5 * bandwidth) {
    tr.warnings.emplace_back("tone spread approaches the pi-pulse excitation bandwidth");
  }
  if (opt.noise) detail::apply_spin_readout_noise(tr, s.readout, s.total_weight(), opt.stream);
  return tr;
}

/// Nutation frequency of each NV at a stripline current (MHz).
inline std::vector<double> rabi_tone_frequencies(const Scene& s, double mw_current_a) {
  s.validate();
  WireSpec wire = s.mw_wire;
  wire.current_a = mw_current_a;
  std::vector<double> out;
  out.reserve(s.nvs.size());
  for (const auto& nv : s.nvs) out.push_back(rabi_frequency(s.constants, wire, mw_probe(s, nv)));
  return out;
}

struct RabiOptions {
  /// Shots averaged per point when power jitter is on. The residual of a
  /// finite average falls as 1/sqrt(repetitions) and shows up as speckle
  /// after the jitter decay; 1024 keeps it under the node-recovery threshold.
  std::size_t repetitions = 1024;
};

/// Rabi nutation sum_i w_i cos(2 pi Omega_i t) exp(-t/T2). With jitter, each
/// repetition scales every Omega_i by a common (1 + eps), eps ~ N(0, rms).
inline Trace simulate_rabi(const Scene& s, double mw_current_a, std::span<const double> durations_ns,
                           double power_jitter_rms, const SimulationOptions& opt = {},
                           const RabiOptions& rabi = {}) {
  if (durations_ns.empty()) throw EmptyGridError("Rabi duration grid is empty");
  if (power_jitter_rms < 0.0) throw InvalidArgumentError("power jitter must be >= 0");
  for (double t : durations_ns) {
    if (t < 0.0) throw InvalidArgumentError("Rabi durations must be >= 0");
  }
  const auto omegas = rabi_tone_frequencies(s, mw_current_a);

  Trace tr;
  tr.axis_kind = AxisKind::time;
  tr.axis.assign(durations_ns.begin(), durations_ns.end());
  tr.values.assign(tr.axis.size(), 0.0);
  tr.sigma.assign(tr.axis.size(), 0.0);

  std::vector<double> scales{1.0};
  if (power_jitter_rms > 0.0) {
    if (rabi.repetitions == 0) throw InvalidArgumentError("repetitions must be positive");
    scales.resize(rabi.repetitions);
    for (std::size_t r = 0; r < rabi.repetitions; ++r) {
      CounterEngine eng(s.readout.rng_seed, opt.stream, static_cast<std::uint32_t>(r + 1));
      scales[r] = 1.0 + power_jitter_rms * standard_normal(eng);
    }
  }
  for (std::size_t k = 0; k < tr.axis.size(); ++k) {
    const double t = tr.axis[k];
    double acc = 0.0;
    for (double scale : scales) {
      for (std::size_t i = 0; i < omegas.size(); ++i) {
        acc += s.nvs[i].weight * std::cos(2.0 * std::numbers::pi * omegas[i] * scale * 1e-3 * t) *
               std::exp(-t / s.nvs[i].t2_ns);
      }
    }
    tr.values[k] = acc / static_cast<double>(scales.size());
  }
  tr.validate();
  if (opt.noise) detail::apply_spin_readout_noise(tr, s.readout, s.total_weight(), opt.stream);
  return tr;
}

/// g2(tau) = 1 - rho^2 / N * exp(-|tau| / tau0) for N equal emitters with
/// signal fraction rho.
inline Trace simulate_antibunching(int n_emitters, double tau0_ns, double signal_fraction,
                                   std::span<const double> lags_ns) {
  if (n_emitters < 1) throw InvalidArgumentError("need at least one emitter");
  if (!(signal_fraction > 0.0) || signal_fraction > 1.0) {
    throw InvalidArgumentError("signal fraction must lie in (0, 1]");
  }
  if (!(tau0_ns > 0.0)) throw InvalidArgumentError("tau0 must be positive");
  if (lags_ns.empty()) throw EmptyGridError("lag grid is empty");
  Trace tr;
  tr.axis_kind = AxisKind::time;
  tr.axis.assign(lags_ns.begin(), lags_ns.end());
  tr.values.resize(tr.axis.size());
  tr.sigma.assign(tr.axis.size(), 0.0);
  const double depth = signal_fraction * signal_fraction / n_emitters;
  for (std::size_t k = 0; k < tr.axis.size(); ++k) {
    tr.values[k] = 1.0 - depth * std::exp(-std::abs(tr.axis[k]) / tau0_ns);
  }
  tr.validate();
  return tr;
}

}  // namespace nvmri
