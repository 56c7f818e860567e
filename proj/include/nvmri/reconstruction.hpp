#pragma once

// Inversion of fitted frequencies into radial NV positions and resolution
// figures.
//
// Frequency differences constrain only differences of 1/r, so one gauge
// degree of freedom remains; it is fixed by an external anchor radius (the
// weighted mean NV distance from the wire, e.g. from confocal imaging).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nvmri/error.hpp"
#include "nvmri/field_model.hpp"
#include "nvmri/least_squares.hpp"
#include "nvmri/spin_model.hpp"

namespace nvmri {

struct FrequencyVsCurrent {
  struct Row {
    double current_a = 0.0;
    std::vector<double> frequencies_mhz;
    std::vector<double> sigmas_mhz;
  };
  std::vector<Row> rows;

  void validate() const {
    if (rows.size() < 2) throw InvalidArgumentError("need at least two currents");
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (!(rows[i].current_a > rows[i - 1].current_a)) {
        throw InvalidArgumentError("currents must be strictly increasing");
      }
    }
  }
};

struct ReconstructionReport {
  /// Ascending radial distances from the wire center (um).
  std::vector<double> radial_positions_um;
  /// Successive position differences (nm).
  std::vector<double> separations_nm;
  double theta_used_rad = 0.0;
  double anchor_radius_um = 0.0;
  /// Largest absolute mismatch between input and reproduced slopes (MHz/A).
  double fit_residual = 0.0;
  std::optional<double> resolution_nm;
};

struct AngleCalibration {
  /// Acute angle between the wire field line and the NV axis, in [0, pi/2].
  double theta_rad = 0.0;
  /// +1 when the wire field's axial part adds to the bias, -1 when it opposes.
  int axial_sign = 1;
  /// Angle between the positive-current field and the NV axis, in [0, pi].
  double theta_full_rad = 0.0;
  double radius_um = 0.0;
  double residual_rms_mhz = 0.0;
  double theta_stderr_rad = 0.0;
  /// Jacobian is (near) rank deficient or the angle is poorly constrained.
  bool wide_confidence = false;
};

struct AngleCalibrationOptions {
  /// Column of each row's frequency list used (0 = highest-frequency NV).
  std::size_t column = 0;
  bool fit_radius = false;
  /// Frequency uncertainty assumed when the fit has no residual degrees of freedom.
  double measurement_sigma_mhz = 0.05;
  double max_theta_stderr_rad = 2.0 * std::numbers::pi / 180.0;
};

/// Modulation frequency |f_+(bias + wire) - f_+(bias)| of an NV at radius r
/// whose positive-current wire field makes angle theta with its axis (MHz).
inline double gradient_shift_full(const SpinConstants& c, const BiasField& bias, double current_a,
                                  double r_um, double theta_rad) {
  const WireSpec wire{0.0, 0.0, current_a, WireKind::dc_gradient};
  const WireSpec wires[] = {wire};
  const ProbePoint p{r_um, 0.0, theta_rad};
  const double with = transition_frequencies_full(c, total_field(bias, wires, p)).f_plus;
  const double without = transition_frequencies_full(c, bias.vector()).f_plus;
  return std::abs(with - without);
}

/// Fit the field angle (and optionally the radius) to gradient-induced shift
/// magnitudes vs current using the full spin Hamiltonian.
inline AngleCalibration calibrate_angle(const FrequencyVsCurrent& data, double r_um,
                                        const SpinConstants& c, const BiasField& bias,
                                        const AngleCalibrationOptions& opt = {}) {
  data.validate();
  c.validate();
  bias.validate();
  std::vector<double> currents, shifts;
  for (const auto& row : data.rows) {
    if (opt.column >= row.frequencies_mhz.size()) throw InvalidArgumentError("missing frequency column");
    currents.push_back(row.current_a);
    shifts.push_back(std::abs(row.frequencies_mhz[opt.column]));
  }
  const auto [mn, mx] = std::minmax_element(shifts.begin(), shifts.end());
  if (*mx - *mn <= 1e-9 * std::max(1.0, *mx)) {
    throw NotIdentifiableError("shifts do not depend on current; the angle is not identifiable");
  }

  const auto m = static_cast<Eigen::Index>(shifts.size());
  auto residual = [&](double theta, double r) {
    Eigen::VectorXd res(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto k = static_cast<std::size_t>(i);
      res(i) = gradient_shift_full(c, bias, currents[k], r, theta) - shifts[k];
    }
    return res;
  };

  // Coarse 1-degree grid, then damped least squares refinement.
  double best_theta = 0.0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int deg = 0; deg <= 180; ++deg) {
    const double th = deg * std::numbers::pi / 180.0;
    const double cost = residual(th, r_um).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      best_theta = th;
    }
  }
  const auto reflect = [](double th) {
    th = std::fmod(std::abs(th), 2.0 * std::numbers::pi);
    return th > std::numbers::pi ? 2.0 * std::numbers::pi - th : th;
  };

  Eigen::VectorXd x0(opt.fit_radius ? 2 : 1);
  Eigen::VectorXd scale(x0.size());
  x0(0) = best_theta;
  scale(0) = 1e-2;
  if (opt.fit_radius) {
    x0(1) = r_um;
    scale(1) = r_um;
  }
  const ResidualFn fn = [&](const Eigen::VectorXd& x) {
    return residual(reflect(x(0)), opt.fit_radius ? x(1) : r_um);
  };
  const LmResult lm = levenberg_marquardt(fn, x0, scale);

  AngleCalibration out;
  out.theta_full_rad = reflect(lm.parameters(0));
  out.radius_um = opt.fit_radius ? lm.parameters(1) : r_um;
  out.theta_rad = std::min(out.theta_full_rad, std::numbers::pi - out.theta_full_rad);
  out.axial_sign = out.theta_full_rad <= std::numbers::pi / 2 ? 1 : -1;
  out.residual_rms_mhz = std::sqrt(2.0 * lm.cost / static_cast<double>(m));

  const auto p = lm.parameters.size();
  const Eigen::MatrixXd jtj = lm.jacobian.transpose() * lm.jacobian;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jtj);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  // Scale-free conditioning of the parameter Jacobian.
  const Eigen::VectorXd d = jtj.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = d.asDiagonal() * jtj * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_scaled(scaled);
  const double cond = eig_scaled.eigenvalues().maxCoeff() /
                      std::max(eig_scaled.eigenvalues().minCoeff(), 1e-300);
  double sigma = opt.measurement_sigma_mhz;
  if (m > p) sigma = std::max(sigma, out.residual_rms_mhz * std::sqrt(double(m) / double(m - p)));
  if (lmin > 1e-14 * std::max(lmax, 1e-300)) {
    out.theta_stderr_rad = sigma * std::sqrt(jtj.inverse()(0, 0));
  } else {
    out.theta_stderr_rad = std::numeric_limits<double>::infinity();
  }
  out.wide_confidence = cond > 1e8 || out.theta_stderr_rad > opt.max_theta_stderr_rad ||
                        m < static_cast<Eigen::Index>(3);
  return out;
}

namespace detail {

/// Solve k * (1/r_i - 1/r_{i+1}) = slope_i with weighted mean radius = anchor.
inline ReconstructionReport invert_differences(std::span<const double> slopes, double k,
                                               double anchor_um, std::span<const double> weights,
                                               double theta_rad) {
  // k is MHz um / A, about 5600 cos(theta); cos(pi/2) rounds to 6e-17, not 0.
  if (!(k > 1e-9)) throw NotIdentifiableError("field angle gives no sensitivity to position");
  if (!(anchor_um > 0.1)) throw InfeasibleAnchorError("anchor radius must exceed 0.1 um");
  for (double s : slopes) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgumentError("slopes must be non-negative");
  }
  const std::size_t n = slopes.size() + 1;
  std::vector<double> w(weights.begin(), weights.end());
  if (w.empty()) w.assign(n, 1.0);
  if (w.size() != n) throw InvalidArgumentError("weights must have one entry per NV");
  double wsum = 0.0;
  for (double x : w) {
    if (!(x > 0.0)) throw InvalidArgumentError("weights must be positive");
    wsum += x;
  }

  double total = 0.0;
  for (double s : slopes) total += s / k;
  auto radii = [&](double u1) {
    std::vector<double> r(n);
    double u = u1;
    r[0] = 1.0 / u;
    for (std::size_t i = 1; i < n; ++i) {
      u -= slopes[i - 1] / k;
      r[i] = 1.0 / u;
    }
    return r;
  };
  auto gauge = [&](double u1) {
    const auto r = radii(u1);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += w[i] * r[i];
    return m / wsum - anchor_um;
  };

  // gauge() falls monotonically from +inf (u1 -> total) to -anchor (u1 -> inf).
  double lo = total + 1e-300;
  double hi = std::max(2.0 * total, 1.0 / anchor_um) + 1.0 / anchor_um;
  while (gauge(hi) > 0.0) hi *= 2.0;
  if (total > 0.0) {
    double step = total;
    while (gauge(total + step) < 0.0 && step > 1e-300) step *= 0.5;
    lo = total + step;
  } else {
    lo = 0.5 / anchor_um;
    while (gauge(lo) < 0.0) lo *= 0.5;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gauge(mid) > 0.0 ? lo : hi) = mid;
  }
  const auto r = radii(0.5 * (lo + hi));
  for (double x : r) {
    if (!(x > kWireGuardRadiusUm) || !std::isfinite(x)) {
      throw InfeasibleAnchorError("no positive-radius solution for this anchor");
    }
  }

  ReconstructionReport rep;
  rep.radial_positions_um = r;
  rep.theta_used_rad = theta_rad;
  rep.anchor_radius_um = anchor_um;
  for (std::size_t i = 1; i < n; ++i) {
    rep.separations_nm.push_back((r[i] - r[i - 1]) * 1000.0);
    const double predicted = k * (1.0 / r[i - 1] - 1.0 / r[i]);
    rep.fit_residual = std::max(rep.fit_residual, std::abs(predicted - slopes[i - 1]));
  }
  return rep;
}

}  // namespace detail

/// Position sensitivity of the DC modality, gamma*|cos(theta)|*2000 (MHz um / A).
inline double dc_slope_constant(const SpinConstants& c, double theta_rad) {
  return c.gamma_mhz_per_gauss * std::abs(std::cos(theta_rad)) * kWireFieldGaussUmPerAmp;
}

/// Position sensitivity of the MW modality, gamma*|sin(theta)|*2000 (MHz um / A).
inline double mw_slope_constant(const SpinConstants& c, double theta_rad) {
  return c.gamma_mhz_per_gauss * std::abs(std::sin(theta_rad)) * kWireFieldGaussUmPerAmp;
}

/// Difference-frequency slopes (MHz/A) between adjacent NVs, nearest first,
/// inverted to radial positions.
inline ReconstructionReport invert_positions_dc(std::span<const double> diff_slopes_mhz_per_a,
                                                double theta_rad, double anchor_radius_um,
                                                const SpinConstants& c,
                                                std::span<const double> weights = {}) {
  c.validate();
  if (diff_slopes_mhz_per_a.empty()) throw InvalidArgumentError("need at least one slope");
  return detail::invert_differences(diff_slopes_mhz_per_a, dc_slope_constant(c, theta_rad),
                                    anchor_radius_um, weights, theta_rad);
}

/// Rabi beat-frequency slope (MHz/A) of an NV pair inverted to two radii.
inline ReconstructionReport invert_positions_mw(double beat_slope_mhz_per_a, double theta_rad,
                                                double anchor_radius_um, const SpinConstants& c,
                                                std::span<const double> weights = {}) {
  c.validate();
  const double slopes[] = {beat_slope_mhz_per_a};
  return detail::invert_differences(slopes, mw_slope_constant(c, theta_rad), anchor_radius_um,
                                    weights, theta_rad);
}

/// Adjacent-pair slopes implied by a set of ascending radii.
inline std::vector<double> predicted_slopes(std::span<const double> radii_um, double slope_constant) {
  std::vector<double> out;
  for (std::size_t i = 1; i < radii_um.size(); ++i) {
    out.push_back(slope_constant * (1.0 / radii_um[i - 1] - 1.0 / radii_um[i]));
  }
  return out;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

inline LineFit fit_line_affine(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgumentError("line fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (std::abs(den) < 1e-300) throw NotIdentifiableError("line fit abscissae are all equal");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.slope * x[i] - f.intercept;
    ss += r * r;
  }
  f.residual_rms = std::sqrt(ss / n);
  return f;
}

inline LineFit fit_line_through_origin(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw InvalidArgumentError("line fit needs >= 1 point");
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  if (sxx <= 0.0) throw NotIdentifiableError("line fit abscissae are all zero");
  LineFit f;
  f.slope = sxy / sxx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.slope * x[i];
    ss += r * r;
  }
  f.residual_rms = std::sqrt(ss / static_cast<double>(x.size()));
  return f;
}

/// Smallest resolvable separation: the separation resolved first at
/// `current_first_resolved_a` shrinks linearly with current up to `current_max_a`.
inline double estimate_resolution(double separation_nm, double current_first_resolved_a,
                                  double current_max_a) {
  if (!(current_first_resolved_a > 0.0)) throw InvalidArgumentError("first-resolved current must be positive");
  if (current_first_resolved_a > current_max_a) {
    throw OrderingError("first-resolved current exceeds the maximum current");
  }
  if (separation_nm < 0.0) throw InvalidArgumentError("separation must be non-negative");
  return separation_nm * current_first_resolved_a / current_max_a;
}

/// Resolution after extending the acquisition window, scaling linearly.
inline double resolution_projections(double resolution_nm, double acquisition_now_ns,
                                     double acquisition_possible_ns) {
  if (!(acquisition_now_ns > 0.0) || !(acquisition_possible_ns > 0.0)) {
    throw InvalidArgumentError("acquisition windows must be positive");
  }
  return resolution_nm * acquisition_now_ns / acquisition_possible_ns;
}

/// Two tones separated by df (MHz) show a node inside a window T (ns).
inline bool node_within_window(double df_mhz, double window_ns) {
  return std::abs(df_mhz) * window_ns * 1e-3 >= 0.5;
}

struct WavelengthRatio {
  std::string label;
  double wavelength_nm = 0.0;
  /// wavelength / resolution
  double raw = 0.0;
  /// raw rounded to two significant figures for reporting
  double rounded = 0.0;
};

inline double round_significant(double x, int digits) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  const double mag = std::pow(10.0, digits - 1 - static_cast<int>(std::floor(std::log10(std::abs(x)))));
  return std::round(x * mag) / mag;
}

/// Resolution expressed as fractions of the optical, effective (stripline) and
/// free-space microwave wavelengths.
inline std::vector<WavelengthRatio> wavelength_ratios(double resolution_nm, double optical_nm,
                                                      double mw_effective_um, double mw_freespace_cm) {
  if (!(resolution_nm > 0.0) || !(optical_nm > 0.0) || !(mw_effective_um > 0.0) ||
      !(mw_freespace_cm > 0.0)) {
    throw InvalidArgumentError("all lengths must be positive");
  }
  std::vector<WavelengthRatio> out;
  auto add = [&](std::string label, double wl_nm) {
    const double raw = wl_nm / resolution_nm;
    out.push_back({std::move(label), wl_nm, raw, round_significant(raw, 2)});
  };
  add("optical", optical_nm);
  add("mw_effective", mw_effective_um * 1e3);
  add("mw_freespace", mw_freespace_cm * 1e7);
  return out;
}

}  // namespace nvmri
