#pragma once

#include <cmath>

#include "nvmri/error.hpp"

namespace nvmri {

/// Number of equal emitters behind a zero-delay antibunching value:
/// N = round(rho^2 / (1 - g2(0))).
inline int estimate_emitter_count(double g2_zero, double signal_fraction) {
  if (!(g2_zero >= 0.0) || !(g2_zero < 1.0)) throw InvalidArgumentError("g2(0) must lie in [0, 1)");
  if (!(signal_fraction > 0.0) || signal_fraction > 1.0) {
    throw InvalidArgumentError("signal fraction must lie in (0, 1]");
  }
  const double implied = signal_fraction * signal_fraction / (1.0 - g2_zero);
  if (implied < 0.5) throw InconsistentInputsError("antibunching dip deeper than the signal fraction allows");
  return static_cast<int>(std::lround(implied));
}

}  // namespace nvmri
