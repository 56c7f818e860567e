#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "nvmri/dsp.hpp"
#include "nvmri/signal_forge.hpp"
#include "nvmri/spectral.hpp"
#include "oracles.hpp"

using namespace nvmri;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Trace tones(const std::vector<double>& freqs_mhz, double span_ns, double dt_ns,
            const ChirpArtifact& chirp = {}) {
  Trace tr;
  tr.axis = uniform_grid(0.0, span_ns - dt_ns, dt_ns);
  tr.values.resize(tr.axis.size());
  tr.sigma.assign(tr.axis.size(), 0.0);
  for (std::size_t k = 0; k < tr.axis.size(); ++k) {
    const double t = tr.axis[k];
    for (double f : freqs_mhz) tr.values[k] += std::cos(kTwoPi * f * 1e-3 * t + chirp.phase(t));
  }
  return tr;
}

std::size_t argmax_from(const std::vector<double>& v, std::size_t from) {
  return static_cast<std::size_t>(std::max_element(v.begin() + static_cast<std::ptrdiff_t>(from), v.end()) -
                                  v.begin());
}

}  // namespace

TEST(Fft, MatchesBruteForceDft) {
  for (std::size_t n : {1u, 2u, 8u, 64u, 7u, 100u, 243u, 1000u}) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(0.37 * i * i + 1.0) + 0.1 * i;
    const auto fast = dsp::fft_real(x);
    const auto slow = oracle::dft_magnitudes(x);
    for (std::size_t k = 0; k < slow.size(); ++k) {
      EXPECT_NEAR(std::abs(fast[k]) / static_cast<double>(n), slow[k], 1e-9) << n << " " << k;
    }
  }
}

TEST(Fft, InverseRoundTrip) {
  for (std::size_t n : {16u, 15u, 1023u}) {
    std::vector<dsp::cplx> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = {std::cos(1.3 * i), std::sin(0.2 * i * i)};
    auto back = dsp::fft(dsp::fft(a), true);
    for (std::size_t i = 0; i < n; ++i) EXPECT_LT(std::abs(back[i] / double(n) - a[i]), 1e-10);
  }
}

TEST(Fft, AnalyticSignalOfCosineHasUnitMagnitude) {
  const auto tr = tones({10.0}, 1000.0, 1.0);
  const auto z = dsp::analytic_signal(tr.values);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(std::abs(z[i]), 1.0, 1e-9);
}

TEST(FftSpectrum, ConstantTraceIsAllDc) {
  Trace tr;
  tr.axis = uniform_grid(0.0, 99.0, 1.0);
  tr.values.assign(100, 2.5);
  const auto spec = fft_spectrum(tr);
  EXPECT_NEAR(spec.values[0], 2.5, 1e-12);
  for (std::size_t k = 1; k < spec.size(); ++k) EXPECT_NEAR(spec.values[k], 0.0, 1e-12);
  EXPECT_EQ(spec.axis_kind, AxisKind::frequency);
  EXPECT_DOUBLE_EQ(spec.axis[0], 0.0);
}

TEST(FftSpectrum, ToneWithinOneBin) {
  const auto tr = tones({47.99}, 1000.0, 1.0);
  const auto spec = fft_spectrum(tr);
  EXPECT_NEAR(spec.axis[1], 1.0, 1e-12);  // resolution 1 / span
  const auto k = argmax_from(spec.values, 1);
  EXPECT_LE(std::abs(spec.axis[k] - 47.99), 1.0);
}

TEST(FftSpectrum, CloseTonesAreUnresolved) {
  const auto tr = tones({47.99, 47.69}, 1000.0, 1.0);
  const auto spec = fft_spectrum(tr);
  int maxima = 0;
  for (std::size_t k = 2; k + 1 < spec.size(); ++k) {
    if (spec.values[k] > spec.values[k - 1] && spec.values[k] > spec.values[k + 1] && spec.values[k] > 0.1) {
      ++maxima;
    }
  }
  EXPECT_EQ(maxima, 1);
}

TEST(FftSpectrum, Errors) {
  Trace tr;
  tr.axis = {0.0, 1.0, 3.0};
  tr.values = {1.0, 2.0, 3.0};
  EXPECT_THROW(fft_spectrum(tr), NonUniformAxisError);
  tr.axis_kind = AxisKind::frequency;
  EXPECT_THROW(fft_spectrum(tr), InvalidArgumentError);
  Trace bad;
  bad.axis = {0.0, 1.0};
  bad.values = {1.0};
  EXPECT_THROW(fft_spectrum(bad), InvalidArgumentError);
}

TEST(Stft, StationaryRidgeIsFlat) {
  const auto tr = tones({47.0}, 2048.0, 1.0);
  const auto map = stft(tr, WindowKind::hann, 128, 32);
  const auto ridge = map.ridge();
  ASSERT_FALSE(ridge.empty());
  const double bin = map.frequency_bins_mhz[1];
  double mean = 0.0;
  for (double f : ridge) mean += f;
  mean /= static_cast<double>(ridge.size());
  double var = 0.0;
  for (double f : ridge) var += (f - mean) * (f - mean);
  var /= static_cast<double>(ridge.size());
  EXPECT_LT(std::sqrt(var), bin);
  EXPECT_NEAR(mean, 47.0, bin);
  EXPECT_EQ(map.magnitude.size(), map.time_bins_ns.size());
  for (const auto& row : map.magnitude) {
    ASSERT_EQ(row.size(), map.frequency_bins_mhz.size());
    for (double m : row) EXPECT_GE(m, 0.0);
  }
}

TEST(Stft, ChirpDeviationConfinedToChirpExtent) {
  const ChirpArtifact chirp{400.0, 2.0};
  const auto chirped = tones({47.0}, 2048.0, 1.0, chirp);
  const auto clean = tones({47.0}, 2048.0, 1.0);
  for (auto kind : {WindowKind::hann, WindowKind::rectangular}) {
    const auto a = stft(chirped, kind, 128, 16);
    const auto b = stft(clean, kind, 128, 16);
    const auto ra = a.ridge();
    const auto rb = b.ridge();
    for (std::size_t i = 0; i < ra.size(); ++i) {
      const double start = a.time_bins_ns[i] - 63.5;
      // The chirp leaves a phase offset, and the rectangular window's image
      // leakage turns that into a ridge wobble of about 0.1 MHz.
      const double tol = kind == WindowKind::hann ? 0.05 : 0.25;
      if (start >= 400.0) {
        EXPECT_NEAR(ra[i], rb[i], tol) << a.time_bins_ns[i];
      }
      if (a.time_bins_ns[i] <= 150.0) {
        EXPECT_GT(ra[i] - rb[i], 0.5) << a.time_bins_ns[i];
      }
    }
  }
}

TEST(Stft, HopOversamplingConsistency) {
  const auto tr = tones({47.0, 12.0}, 2048.0, 1.0, ChirpArtifact{400.0, 2.0});
  const auto coarse = stft(tr, WindowKind::hann, 128, 128);
  const auto fine = stft(tr, WindowKind::hann, 128, 32);
  const auto rc = coarse.ridge();
  const auto rf = fine.ridge();
  const double bin = coarse.frequency_bins_mhz[1];
  for (std::size_t i = 0; i < rc.size(); ++i) {
    ASSERT_LT(4 * i, rf.size());
    EXPECT_DOUBLE_EQ(coarse.time_bins_ns[i], fine.time_bins_ns[4 * i]);
    EXPECT_LE(std::abs(rc[i] - rf[4 * i]), bin);
  }
}

TEST(Stft, Errors) {
  const auto tr = tones({47.0}, 100.0, 1.0);
  EXPECT_THROW(stft(tr, WindowKind::hann, 101, 1), WindowTooLongError);
  EXPECT_THROW(stft(tr, WindowKind::hann, 32, 0), InvalidArgumentError);
  EXPECT_NO_THROW(stft(tr, WindowKind::rectangular, 100, 1));
  EXPECT_EQ(to_string(WindowKind::hann), "hann");
}

TEST(CompensateChirp, ZeroExtentIsIdentity) {
  const auto tr = tones({47.0, 9.0}, 1024.0, 1.0);
  const auto out = compensate_chirp(tr, 0.0);
  EXPECT_EQ(out.values, tr.values);
}

TEST(CompensateChirp, RaisedCosineTaper) {
  const auto tr = tones({0.0}, 1024.0, 1.0);  // constant 1
  const auto out = compensate_chirp(tr, 400.0);
  ASSERT_EQ(out.window.size(), tr.size());
  EXPECT_NEAR(out.values[0], 0.0, 1e-15);
  EXPECT_NEAR(out.values[200], 0.5, 1e-12);
  for (std::size_t k = 400; k < tr.size(); ++k) EXPECT_EQ(out.values[k], 1.0);
  for (std::size_t k = 1; k < 400; ++k) {
    EXPECT_GT(out.values[k], out.values[k - 1]);
    EXPECT_DOUBLE_EQ(out.window[k], out.values[k]);
  }
}

TEST(CompensateChirp, Errors) {
  const auto tr = tones({47.0}, 1024.0, 1.0);
  EXPECT_THROW(compensate_chirp(tr, 1023.0), InvalidArgumentError);
  EXPECT_THROW(compensate_chirp(tr, -1.0), InvalidArgumentError);
}
