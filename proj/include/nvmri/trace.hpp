#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nvmri/error.hpp"

namespace nvmri {

enum class AxisKind { time, frequency };

/// A sampled 1D signal. Time axes are in ns, frequency axes in MHz.
struct Trace {
  std::vector<double> axis;
  std::vector<double> values;
  /// Per-sample standard deviation; all zero for noiseless traces.
  std::vector<double> sigma;
  AxisKind axis_kind = AxisKind::time;
  bool noise_applied = false;
  std::uint64_t seed_used = 0;
  /// Analysis window already multiplied into `values` (empty means none).
  std::vector<double> window;
  std::vector<std::string> warnings;

  std::size_t size() const { return values.size(); }

  void validate() const {
    if (axis.size() != values.size()) throw InvalidArgumentError("trace axis/value length mismatch");
    if (!sigma.empty() && sigma.size() != values.size()) {
      throw InvalidArgumentError("trace sigma length mismatch");
    }
    if (!window.empty() && window.size() != values.size()) {
      throw InvalidArgumentError("trace window length mismatch");
    }
    for (std::size_t i = 1; i < axis.size(); ++i) {
      if (!(axis[i] > axis[i - 1])) throw InvalidArgumentError("trace axis must be strictly increasing");
    }
  }

  /// Sample spacing of a uniform axis; throws when spacing varies.
  double uniform_step(double rel_tol = 1e-6) const {
    if (axis.size() < 2) throw NonUniformAxisError("trace needs at least two samples");
    const double step = (axis.back() - axis.front()) / static_cast<double>(axis.size() - 1);
    for (std::size_t i = 1; i < axis.size(); ++i) {
      if (std::abs((axis[i] - axis[i - 1]) - step) > rel_tol * std::abs(step)) {
        throw NonUniformAxisError("trace axis is not uniformly sampled");
      }
    }
    return step;
  }

  double window_at(std::size_t i) const { return window.empty() ? 1.0 : window[i]; }
};

/// Inclusive uniform grid start, start+step, ... <= stop.
inline std::vector<double> uniform_grid(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start) throw InvalidArgumentError("invalid grid specification");
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = start + step * static_cast<double>(i);
  return g;
}

}  // namespace nvmri
