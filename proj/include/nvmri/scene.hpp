#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "nvmri/error.hpp"
#include "nvmri/field_model.hpp"
#include "nvmri/spin_model.hpp"

namespace nvmri {

/// One NV spin: radial distance to each wire and the angle between that
/// wire's field (positive current) and the NV axis.
struct NVCenter {
  double r_dc_um = 10.0;
  double theta_dc_rad = 0.0;
  double r_mw_um = 10.0;
  double theta_mw_rad = std::numbers::pi / 2;
  double weight = 1.0;
  double t2_ns = 1.0e5;
};

/// Photon-count readout. Noise is Poisson on counts, then normalized.
struct ReadoutModel {
  double mean_counts_per_point = 2.0e4;
  double contrast = 0.3;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(mean_counts_per_point > 0.0)) throw InvalidArgumentError("mean counts must be positive");
    if (!(contrast > 0.0) || contrast > 0.35) throw InvalidArgumentError("contrast must lie in (0, 0.35]");
  }

  /// Counts per point giving peak-signal / noise ~= snr for spin-signal traces.
  static ReadoutModel for_snr(double snr, double contrast = 0.3, std::uint64_t seed = 0) {
    const double root = 2.0 * snr / contrast;
    return {root * root, contrast, seed};
  }
};

struct Scene {
  std::vector<NVCenter> nvs;
  WireSpec dc_wire{0.0, 0.0, 0.0, WireKind::dc_gradient};
  WireSpec mw_wire{0.0, 0.0, 0.0, WireKind::mw_stripline};
  BiasField bias;
  SpinConstants constants;
  ReadoutModel readout;

  void validate() const {
    if (nvs.empty()) throw InvalidArgumentError("scene needs at least one NV");
    for (const auto& nv : nvs) {
      if (!(nv.weight > 0.0)) throw InvalidArgumentError("NV weights must be positive");
      if (!(nv.t2_ns > 0.0)) throw InvalidArgumentError("NV coherence time must be positive");
      if (!(nv.r_dc_um > 0.0) || !(nv.r_mw_um > 0.0)) {
        throw InvalidArgumentError("NV radial distances must be positive");
      }
    }
    if (dc_wire.kind != WireKind::dc_gradient) throw InvalidArgumentError("dc wire has wrong kind");
    if (mw_wire.kind != WireKind::mw_stripline) throw InvalidArgumentError("mw wire has wrong kind");
    bias.validate();
    constants.validate();
    readout.validate();
  }

  double total_weight() const {
    double s = 0.0;
    for (const auto& nv : nvs) s += nv.weight;
    return s;
  }
};

/// Probe point of an NV relative to the DC gradient wire.
inline ProbePoint dc_probe(const Scene& s, const NVCenter& nv) {
  return {s.dc_wire.center_x_um + nv.r_dc_um, s.dc_wire.center_z_um, nv.theta_dc_rad};
}

/// Probe point of an NV relative to the microwave stripline.
inline ProbePoint mw_probe(const Scene& s, const NVCenter& nv) {
  return {s.mw_wire.center_x_um + nv.r_mw_um, s.mw_wire.center_z_um, nv.theta_mw_rad};
}

inline double degrees(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace nvmri
