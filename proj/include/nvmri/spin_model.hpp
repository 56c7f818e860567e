#pragma once

// NV ground-state spin-1 transition frequencies.
//
// Units throughout the toolkit: MHz, Gauss, um, ns, A.
// Basis ordering for matrices is (|+1>, |0>, |-1>) with the NV axis along +z.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "nvmri/error.hpp"

namespace nvmri {

struct SpinConstants {
  double zero_field_splitting_mhz = 2870.0;
  double gamma_mhz_per_gauss = 2.8;

  void validate() const {
    if (!(zero_field_splitting_mhz > 0.0) || !(gamma_mhz_per_gauss > 0.0)) {
      throw InvalidArgumentError("spin constants must be positive");
    }
  }
};

/// Static field in the lab frame (Gauss), NV axis along +z.
struct FieldVector {
  double bx = 0.0;
  double by = 0.0;
  double bz = 0.0;

  double magnitude() const { return std::sqrt(bx * bx + by * by + bz * bz); }
  double transverse() const { return std::hypot(bx, by); }
  bool finite() const { return std::isfinite(bx) && std::isfinite(by) && std::isfinite(bz); }

  FieldVector& operator+=(const FieldVector& o) {
    bx += o.bx;
    by += o.by;
    bz += o.bz;
    return *this;
  }
  friend FieldVector operator+(FieldVector a, const FieldVector& b) { return a += b; }
  friend FieldVector operator*(double s, const FieldVector& f) {
    return {s * f.bx, s * f.by, s * f.bz};
  }
};

/// m_s = 0 -> -1 and m_s = 0 -> +1 transition frequencies (MHz).
struct TransitionPair {
  double f_minus = 0.0;
  double f_plus = 0.0;
};

namespace detail {

inline Eigen::Matrix3cd spin_hamiltonian(const SpinConstants& c, const FieldVector& b) {
  using cd = std::complex<double>;
  const double s = 1.0 / std::numbers::sqrt2;
  Eigen::Matrix3cd sx, sy, sz;
  sx << 0, s, 0, s, 0, s, 0, s, 0;
  sy << 0, cd(0, -s), 0, cd(0, s), 0, cd(0, -s), 0, cd(0, s), 0;
  sz << 1, 0, 0, 0, 0, 0, 0, 0, -1;
  const double g = c.gamma_mhz_per_gauss;
  return c.zero_field_splitting_mhz * sz * sz + g * (b.bx * sx + b.by * sy + b.bz * sz);
}

/// Eigenvalues ordered as (|+1>, |0>, |-1>) by adiabatic continuation from
/// the axial-field eigenbasis. The m_s = 0 level is the eigenvector with the
/// largest |0> weight. The +-1 pair cannot cross while a transverse field
/// couples them, so along a path at fixed bz the +1 level stays above the -1
/// level when bz >= 0 and below it when bz < 0 (bz = 0 follows the bz >= 0
/// convention, f_plus >= f_minus).
inline std::array<double, 3> labeled_levels(const SpinConstants& c, const FieldVector& b) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> solver(spin_hamiltonian(c, b));
  const auto& vecs = solver.eigenvectors();
  const auto& vals = solver.eigenvalues();  // ascending

  int zero = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::norm(vecs(1, k)) > std::norm(vecs(1, zero))) zero = k;
  }
  std::array<int, 2> rest{};
  for (int k = 0, j = 0; k < 3; ++k) {
    if (k != zero) rest[static_cast<std::size_t>(j++)] = k;
  }
  const int upper = rest[1];
  const int lower = rest[0];
  const bool plus_on_top = b.bz >= 0.0;
  return {vals(plus_on_top ? upper : lower), vals(zero), vals(plus_on_top ? lower : upper)};
}

}  // namespace detail

/// Field magnitude limit for full diagonalization (Gauss).
inline double full_model_field_limit(const SpinConstants& c) {
  return 0.5 * c.zero_field_splitting_mhz / c.gamma_mhz_per_gauss;
}

/// Full diagonalization of H = D Sz^2 + gamma B.S.
inline TransitionPair transition_frequencies_full(const SpinConstants& c, const FieldVector& b) {
  c.validate();
  if (!b.finite()) throw InvalidArgumentError("field components must be finite");
  if (b.magnitude() >= full_model_field_limit(c)) {
    throw FieldTooLargeError("field magnitude exceeds 0.5*D/gamma; level labels are ambiguous");
  }
  const auto levels = detail::labeled_levels(c, b);
  return {levels[2] - levels[1], levels[0] - levels[1]};
}

/// Secular Zeeman shift gamma*|B|*cos(theta) of one m_s = +-1 line (MHz).
/// The caller applies the sign of m_s.
inline double transition_shift_secular(const SpinConstants& c, double b_magnitude_gauss,
                                       double theta_rad) {
  if (b_magnitude_gauss < 0.0) throw InvalidArgumentError("field magnitude must be non-negative");
  if (theta_rad < 0.0 || theta_rad > std::numbers::pi) {
    throw InvalidArgumentError("theta must lie in [0, pi]");
  }
  return c.gamma_mhz_per_gauss * b_magnitude_gauss * std::cos(theta_rad);
}

/// Secular transitions: only the axial component is kept, D -+ gamma*Bz.
inline TransitionPair transition_frequencies_secular(const SpinConstants& c,
                                                     const FieldVector& b) {
  const double shift = c.gamma_mhz_per_gauss * b.bz;
  return {c.zero_field_splitting_mhz - shift, c.zero_field_splitting_mhz + shift};
}

}  // namespace nvmri
