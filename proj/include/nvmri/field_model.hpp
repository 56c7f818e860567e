#pragma once

// Thin-wire fields of the gradient wire and microwave stripline.
//
// Wires run along +y. Positions live in the x-z plane (um). A positive current
// flows along +y, so the field circulates as y_hat x rho_hat.

#include <array>
#include <cmath>
#include <optional>
#include <span>

#include "nvmri/error.hpp"
#include "nvmri/spin_model.hpp"

namespace nvmri {

/// mu0 / (2 pi) in Gauss * um / A, i.e. |B| = 2000 I / r.
inline constexpr double kWireFieldGaussUmPerAmp = 2000.0;

/// Below this radius the thin-wire model is not used.
inline constexpr double kWireGuardRadiusUm = 0.05;

enum class WireKind { dc_gradient, mw_stripline };

struct WireSpec {
  double center_x_um = 0.0;
  double center_z_um = 0.0;
  double current_a = 0.0;
  WireKind kind = WireKind::dc_gradient;
};

/// Lab-frame position. theta_override fixes the angle between the wire field
/// (for positive current) and the NV axis; the field then lies in the x-z plane
/// at that angle from +z, with non-negative x component.
struct ProbePoint {
  double x_um = 0.0;
  double z_um = 0.0;
  std::optional<double> theta_override;
};

struct BiasField {
  double magnitude_gauss = 0.0;
  std::array<double, 3> direction{0.0, 0.0, 1.0};

  void validate() const {
    const double n = std::sqrt(direction[0] * direction[0] + direction[1] * direction[1] +
                               direction[2] * direction[2]);
    if (std::abs(n - 1.0) > 1e-9) throw InvalidArgumentError("bias direction must be a unit vector");
    if (!std::isfinite(magnitude_gauss)) throw InvalidArgumentError("bias magnitude must be finite");
  }

  FieldVector vector() const {
    return {magnitude_gauss * direction[0], magnitude_gauss * direction[1],
            magnitude_gauss * direction[2]};
  }
};

inline double wire_distance(const WireSpec& wire, const ProbePoint& p) {
  return std::hypot(p.x_um - wire.center_x_um, p.z_um - wire.center_z_um);
}

namespace detail {

inline double checked_radius(const WireSpec& wire, const ProbePoint& p) {
  if (!std::isfinite(wire.current_a)) throw InvalidArgumentError("wire current must be finite");
  const double r = wire_distance(wire, p);
  if (!(r > kWireGuardRadiusUm)) {
    throw DegeneratePointError("probe point lies within the thin-wire guard radius");
  }
  return r;
}

}  // namespace detail

/// Field of one wire at a point (Gauss).
inline FieldVector wire_field(const WireSpec& wire, const ProbePoint& p) {
  const double r = detail::checked_radius(wire, p);
  const double b = kWireFieldGaussUmPerAmp * wire.current_a / r;
  if (p.theta_override) {
    const double th = *p.theta_override;
    return {b * std::sin(th), 0.0, b * std::cos(th)};
  }
  const double dx = (p.x_um - wire.center_x_um) / r;
  const double dz = (p.z_um - wire.center_z_um) / r;
  return {b * dz, 0.0, -b * dx};
}

/// Signed field component along the NV axis, cos(theta) * 2000 I / r (Gauss).
inline double axial_projection(const WireSpec& wire, const ProbePoint& p) {
  const double r = detail::checked_radius(wire, p);
  const double b = kWireFieldGaussUmPerAmp * wire.current_a / r;
  if (p.theta_override) return b * std::cos(*p.theta_override);
  return -b * (p.x_um - wire.center_x_um) / r;
}

inline FieldVector total_field(const BiasField& bias, std::span<const WireSpec> wires,
                               const ProbePoint& p) {
  FieldVector total = bias.vector();
  for (const auto& w : wires) total += wire_field(w, p);
  return total;
}

/// Nutation frequency driven by the stripline, gamma * |B1 perp| (MHz).
inline double rabi_frequency(const SpinConstants& c, const WireSpec& mw_wire, const ProbePoint& p) {
  if (mw_wire.kind != WireKind::mw_stripline) {
    throw WrongWireKindError("Rabi frequency requires a microwave stripline");
  }
  const FieldVector b1 = wire_field(mw_wire, p);
  return c.gamma_mhz_per_gauss * b1.transverse();
}

/// Transverse drive amplitude that produces a given nutation frequency (Gauss).
inline double transverse_field_for_rabi(const SpinConstants& c, double rabi_mhz) {
  return rabi_mhz / c.gamma_mhz_per_gauss;
}

}  // namespace nvmri
