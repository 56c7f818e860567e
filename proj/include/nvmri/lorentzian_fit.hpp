#pragma once

// Multi-Lorentzian fits to CW-ESR spectra with a constant baseline.
// Centers and widths are nonlinear; baseline and signed amplitudes are
// projected out by linear least squares.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "nvmri/error.hpp"
#include "nvmri/least_squares.hpp"
#include "nvmri/trace.hpp"

namespace nvmri {

struct LorentzianPeak {
  double center_mhz = 0.0;
  double fwhm_mhz = 0.0;
  /// Signed peak height above the baseline (negative for fluorescence dips).
  double amplitude = 0.0;
};

struct LorentzianFit {
  /// Sorted by ascending center.
  std::vector<LorentzianPeak> peaks;
  double baseline = 0.0;
  double residual_rms = 0.0;
  bool converged = false;
  /// Peaks collapsed onto each other or lost their amplitude: the requested
  /// peak count is not supported by the data.
  bool degenerate = false;

  std::vector<double> splittings() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < peaks.size(); ++i) out.push_back(peaks[i].center_mhz - peaks[i - 1].center_mhz);
    return out;
  }
};

struct LorentzianFitOptions {
  /// Explicit starting centers; when set only this start is used.
  std::vector<double> initial_centers;
  /// Starting width; 0 estimates it from the data.
  double fwhm_guess_mhz = 0.0;
  LmOptions lm{.max_iterations = 300};
  /// Refit with one peak fewer and flag the fit as degenerate when the last
  /// peak does not lower chi^2 significantly.
  bool model_order_check = true;
};

namespace detail {

struct LorentzianProblem {
  std::vector<double> f;
  std::vector<double> y;
  int n = 0;

  Eigen::MatrixXd basis(const Eigen::VectorXd& p) const {
    const auto m = static_cast<Eigen::Index>(f.size());
    Eigen::MatrixXd b(m, 1 + n);
    for (Eigen::Index i = 0; i < m; ++i) {
      b(i, 0) = 1.0;
      for (int k = 0; k < n; ++k) {
        const double hw = 0.5 * std::exp(p(n + k));
        const double x = (f[static_cast<std::size_t>(i)] - p(k)) / hw;
        b(i, 1 + k) = 1.0 / (1.0 + x * x);
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

inline double median_of(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

}  // namespace detail

inline LorentzianFit fit_lorentzians(const Trace& tr, int n_peaks, const LorentzianFitOptions& opt = {}) {
  tr.validate();
  if (tr.axis_kind != AxisKind::frequency) throw InvalidArgumentError("Lorentzian fit needs a spectrum");
  if (n_peaks < 1) throw InvalidArgumentError("n_peaks must be >= 1");
  if (tr.size() < static_cast<std::size_t>(3 * n_peaks + 3)) {
    throw InvalidArgumentError("spectrum too short for the requested peak count");
  }
  const std::size_t m = tr.size();
  const double span = tr.axis.back() - tr.axis.front();

  // Peak finding on the baseline-removed, polarity-corrected, 3-point smoothed signal.
  const double base = detail::median_of(tr.values);
  std::vector<double> s(m);
  double max_up = 0.0, max_down = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = tr.values[i] - base;
    max_up = std::max(max_up, d);
    max_down = std::max(max_down, -d);
  }
  const double polarity = max_down > max_up ? -1.0 : 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double l = tr.values[i == 0 ? 0 : i - 1];
    const double r = tr.values[i + 1 == m ? i : i + 1];
    s[i] = polarity * ((l + 2.0 * tr.values[i] + r) / 4.0 - base);
  }
  const auto top_it = std::max_element(s.begin(), s.end());
  const auto top = static_cast<std::size_t>(top_it - s.begin());
  std::size_t lo = top, hi = top;
  while (lo > 0 && s[lo] > 0.5 * *top_it) --lo;
  while (hi + 1 < m && s[hi] > 0.5 * *top_it) ++hi;
  const double feature_width = std::max(tr.axis[hi] - tr.axis[lo], 2.0 * span / static_cast<double>(m));
  const double width_guess = opt.fwhm_guess_mhz > 0.0 ? opt.fwhm_guess_mhz : feature_width;

  std::vector<std::pair<double, double>> found;  // (center, height)
  for (std::size_t i = 1; i + 1 < m; ++i) {
    if (s[i] > s[i - 1] && s[i] >= s[i + 1] && s[i] >= 0.1 * *top_it) found.emplace_back(tr.axis[i], s[i]);
  }
  std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  // Start grid: explicit centers, else resolved peaks plus even spreads across the main feature.
  std::vector<std::pair<std::vector<double>, double>> starts;  // (centers, width)
  if (!opt.initial_centers.empty()) {
    if (static_cast<int>(opt.initial_centers.size()) != n_peaks) {
      throw InvalidArgumentError("initial_centers must have n_peaks entries");
    }
    starts.emplace_back(opt.initial_centers, width_guess);
  } else {
    std::vector<double> resolved;
    for (const auto& [c, h] : found) {
      if (static_cast<int>(resolved.size()) == n_peaks) break;
      if (std::all_of(resolved.begin(), resolved.end(),
                      [&](double r) { return std::abs(r - c) > 0.5 * width_guess; })) {
        resolved.push_back(c);
      }
    }
    if (static_cast<int>(resolved.size()) == n_peaks) {
      starts.emplace_back(resolved, width_guess);
    }
    const double center = tr.axis[top];
    for (double frac : {0.3, 0.5, 0.7, 0.9}) {
      std::vector<double> st;
      for (int k = 0; k < n_peaks; ++k) {
        const double u = n_peaks == 1 ? 0.0 : -1.0 + 2.0 * k / (n_peaks - 1);
        st.push_back(center + u * frac * feature_width);
      }
      starts.emplace_back(st, std::max(feature_width / n_peaks, width_guess / (2.0 * n_peaks)));
    }
  }

  detail::LorentzianProblem prob{tr.axis, tr.values, n_peaks};
  const ResidualFn fn = [&prob](const Eigen::VectorXd& p) { return prob.residual(p); };
  Eigen::VectorXd scale(2 * n_peaks);
  for (int k = 0; k < n_peaks; ++k) {
    scale(k) = std::max(width_guess, span / static_cast<double>(m));
    scale(n_peaks + k) = 1.0;
  }

  LmResult best;
  for (const auto& [centers, width] : starts) {
    Eigen::VectorXd x0(2 * n_peaks);
    for (int k = 0; k < n_peaks; ++k) {
      x0(k) = centers[static_cast<std::size_t>(k)];
      x0(n_peaks + k) = std::log(std::max(width, 1e-6));
    }
    LmResult r = levenberg_marquardt(fn, x0, scale, opt.lm);
    if (r.cost < best.cost) best = std::move(r);
  }

  const Eigen::MatrixXd b = prob.basis(best.parameters);
  const Eigen::VectorXd c = prob.coefficients(b);
  LorentzianFit fit;
  fit.baseline = c(0);
  fit.converged = best.converged;
  fit.residual_rms = std::sqrt(2.0 * best.cost / static_cast<double>(m));
  for (int k = 0; k < n_peaks; ++k) {
    fit.peaks.push_back({best.parameters(k), std::exp(best.parameters(n_peaks + k)), c(1 + k)});
  }
  std::sort(fit.peaks.begin(), fit.peaks.end(),
            [](const LorentzianPeak& a, const LorentzianPeak& b) { return a.center_mhz < b.center_mhz; });

  double max_amp = 0.0;
  for (const auto& p : fit.peaks) max_amp = std::max(max_amp, std::abs(p.amplitude));
  for (std::size_t i = 0; i < fit.peaks.size(); ++i) {
    const auto& p = fit.peaks[i];
    if (std::abs(p.amplitude) < 1e-3 * max_amp || p.fwhm_mhz > 10.0 * span ||
        (p.amplitude > 0.0) != (fit.peaks.front().amplitude > 0.0)) {
      fit.degenerate = true;
    }
    if (i > 0) {
      const auto& q = fit.peaks[i - 1];
      if (p.center_mhz - q.center_mhz < 0.5 * std::min(p.fwhm_mhz, q.fwhm_mhz)) fit.degenerate = true;
    }
  }
  if (fit.converged && !fit.degenerate && opt.model_order_check && n_peaks >= 2) {
    // Delta chi^2 for 3 extra parameters, noise scale from the larger model; 16.27 is p = 0.001.
    LorentzianFitOptions lower_opt;
    lower_opt.fwhm_guess_mhz = opt.fwhm_guess_mhz;
    lower_opt.lm = opt.lm;
    lower_opt.model_order_check = false;
    try {
      const double lower = fit_lorentzians(tr, n_peaks - 1, lower_opt).residual_rms;
      const double dof = static_cast<double>(m) - static_cast<double>(3 * n_peaks + 1);
      const double var = std::max(fit.residual_rms * fit.residual_rms * static_cast<double>(m) / dof, 1e-300);
      const double gain = static_cast<double>(m) * (lower * lower - fit.residual_rms * fit.residual_rms) / var;
      if (gain < 16.27) fit.degenerate = true;
    } catch (const NonConvergenceError&) {
    }
  }
  if (!fit.converged) {
    std::vector<double> params(best.parameters.data(), best.parameters.data() + best.parameters.size());
    throw NonConvergenceError("Lorentzian fit did not converge", std::move(params), best.cost);
  }
  return fit;
}

}  // namespace nvmri
