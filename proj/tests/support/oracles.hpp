#pragma once

// Test-only reference computations. None of these call into the library's
// implementation paths they are used to check.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

/// Eigenvalues of H = D Sz^2 + g (bx Sx + by Sy + bz Sz) from the closed-form
/// trigonometric solution of the characteristic cubic, ascending.
inline std::array<double, 3> spin1_eigenvalues(double d, double g, double bx, double by, double bz) {
  // H in basis (+1, 0, -1):
  // [ D + g bz      g b-/sqrt2    0          ]
  // [ g b+/sqrt2    0             g b-/sqrt2 ]
  // [ 0             g b+/sqrt2    D - g bz   ]
  // with b+- = bx +- i by. det(H - x) expanded by hand:
  const double a = d + g * bz;
  const double c = d - g * bz;
  const double t2 = 0.5 * g * g * (bx * bx + by * by);  // |g b+/sqrt2|^2
  // -(x^3) + (a + c) x^2 + (2 t2 - a c) x - t2 (a + c) = 0
  const double p2 = -(a + c);
  const double p1 = a * c - 2.0 * t2;
  const double p0 = t2 * (a + c);
  // x^3 + p2 x^2 + p1 x + p0 = 0, depressed with x = y - p2/3.
  const double shift = -p2 / 3.0;
  const double p = p1 - p2 * p2 / 3.0;
  const double q = 2.0 * p2 * p2 * p2 / 27.0 - p2 * p1 / 3.0 + p0;
  std::array<double, 3> roots{};
  if (std::abs(p) < 1e-300) {
    roots = {shift, shift, shift};
  } else {
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) roots[k] = shift + m * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// (f_minus, f_plus) for moderate fields where m_s = 0 is the lowest level.
inline std::pair<double, double> spin1_transitions(double d, double g, double bx, double by, double bz) {
  const auto e = spin1_eigenvalues(d, g, bx, by, bz);
  const double lower = e[1] - e[0];
  const double upper = e[2] - e[0];
  return bz >= 0.0 ? std::pair{lower, upper} : std::pair{upper, lower};
}

/// Second-order perturbative f_plus for a transverse field.
inline double f_plus_second_order(double d, double g, double b_perp, double bz) {
  const double v2 = g * g * b_perp * b_perp / 2.0;
  return d + g * bz + v2 * (2.0 / (d + g * bz) + 1.0 / (d - g * bz));
}

/// Brute-force DFT magnitudes |X_k| / N for k = 0..N/2.
inline std::vector<double> dft_magnitudes(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * j) / static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = std::abs(acc) / static_cast<double>(n);
  }
  return out;
}

/// Monte-Carlo g2(0) estimate from simulated photon streams: one antibunched
/// emitter (renewal process with two exponential stages, g2 = 1 - exp(-|t|/tau0))
/// plus Poissonian background, normalized coincidences in |tau| < bin/2.
inline double monte_carlo_g2_zero(double tau0_ns, double signal_fraction, double duration_ns,
                                  double bin_ns, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double rate_stage = 1.0 / (2.0 * tau0_ns);  // a = b, tau0 = 1 / (a + b)
  std::exponential_distribution<double> stage(rate_stage);
  std::vector<double> times;
  for (double t = 0.0;;) {
    t += stage(rng) + stage(rng);
    if (t > duration_ns) break;
    times.push_back(t);
  }
  const double signal_rate = static_cast<double>(times.size()) / duration_ns;
  const double bg_rate = signal_rate * (1.0 / signal_fraction - 1.0);
  if (bg_rate > 0.0) {
    std::exponential_distribution<double> bg(bg_rate);
    for (double t = bg(rng); t < duration_ns; t += bg(rng)) times.push_back(t);
  }
  std::sort(times.begin(), times.end());
  const double total_rate = static_cast<double>(times.size()) / duration_ns;
  std::uint64_t coincidences = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t j = i + 1; j < times.size() && times[j] - times[i] < 0.5 * bin_ns; ++j) ++coincidences;
  }
  // Pairs with |tau| < bin/2 counted once per unordered pair -> both signs.
  const double expected = total_rate * total_rate * duration_ns * bin_ns;
  return 2.0 * static_cast<double>(coincidences) / expected;
}

/// Dense scan + bisection for radii satisfying k (1/r_i - 1/r_{i+1}) = s_i with
/// mean radius equal to `anchor`. Parameterized by r_1 directly.
inline std::vector<double> brute_force_radii(const std::vector<double>& slopes, double k, double anchor) {
  auto radii = [&](double r1) {
    std::vector<double> r{r1};
    for (double s : slopes) {
      const double inv = 1.0 / r.back() - s / k;
      r.push_back(inv > 0 ? 1.0 / inv : 1e300);
    }
    return r;
  };
  auto mean_minus = [&](double r1) {
    const auto r = radii(r1);
    double m = 0.0;
    for (double x : r) m += x;
    return m / static_cast<double>(r.size()) - anchor;
  };
  double lo = 1e-3, hi = anchor;
  const int steps = 200000;
  for (int i = 1; i <= steps; ++i) {
    const double x = 1e-3 + (anchor - 1e-3) * i / steps;
    if (mean_minus(x) >= 0.0) {
      hi = x;
      lo = 1e-3 + (anchor - 1e-3) * (i - 1) / steps;
      break;
    }
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_minus(mid) < 0.0 ? lo : hi) = mid;
  }
  return radii(0.5 * (lo + hi));
}

}  // namespace oracle
