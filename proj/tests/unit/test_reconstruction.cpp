#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "nvmri/reconstruction.hpp"
#include "nvmri/scene.hpp"
#include "oracles.hpp"

using namespace nvmri;

namespace {

const SpinConstants kC{};
const std::vector<double> kSiteA{9.862, 9.946, 10.092};

FrequencyVsCurrent synthetic_shifts(double theta_rad, double r_um, const BiasField& bias,
                                    const std::vector<double>& currents) {
  FrequencyVsCurrent data;
  for (double i : currents) {
    data.rows.push_back({i, {gradient_shift_full(kC, bias, i, r_um, theta_rad)}, {0.01}});
  }
  return data;
}

}  // namespace

TEST(CalibrateAngle, RecoversSiteAAngle) {
  const BiasField bias{18.0};
  const std::vector<double> currents{0.04, 0.08, 0.12, 0.16, 0.2};
  const auto cal = calibrate_angle(synthetic_shifts(radians(51.3), 9.95, bias, currents), 9.95, kC, bias);
  EXPECT_NEAR(degrees(cal.theta_rad), 51.3, 0.5);
  EXPECT_EQ(cal.axial_sign, 1);
  EXPECT_LT(cal.residual_rms_mhz, 1e-6);
  EXPECT_FALSE(cal.wide_confidence);
}

TEST(CalibrateAngle, OpposingOrientationReportsAcuteAngleAndSign) {
  const BiasField bias{18.0};
  const std::vector<double> currents{0.04, 0.08, 0.12, 0.16, 0.2};
  const auto cal = calibrate_angle(synthetic_shifts(radians(128.7), 9.95, bias, currents), 9.95, kC, bias);
  EXPECT_NEAR(degrees(cal.theta_rad), 51.3, 0.5);
  EXPECT_NEAR(degrees(cal.theta_full_rad), 128.7, 0.5);
  EXPECT_EQ(cal.axial_sign, -1);
}

TEST(CalibrateAngle, ParallelField) {
  const BiasField bias{18.0};
  const std::vector<double> currents{0.04, 0.08, 0.12, 0.16, 0.2};
  const auto cal = calibrate_angle(synthetic_shifts(0.0, 9.95, bias, currents), 9.95, kC, bias);
  EXPECT_NEAR(degrees(cal.theta_rad), 0.0, 0.5);
}

TEST(CalibrateAngle, TwoCurrentsWithFreeRadiusFlagged) {
  const BiasField bias{18.0};
  const auto data = synthetic_shifts(radians(51.3), 9.95, bias, {0.04, 0.2});
  AngleCalibrationOptions opt;
  opt.fit_radius = true;
  const auto cal = calibrate_angle(data, 9.5, kC, bias, opt);
  EXPECT_TRUE(cal.wide_confidence);
  // Even at fixed radius two currents are flagged.
  EXPECT_TRUE(calibrate_angle(data, 9.95, kC, bias).wide_confidence);
}

TEST(CalibrateAngle, Errors) {
  const BiasField bias{18.0};
  FrequencyVsCurrent flat;
  flat.rows = {{0.1, {5.0}, {}}, {0.2, {5.0}, {}}, {0.3, {5.0}, {}}};
  EXPECT_THROW(calibrate_angle(flat, 9.95, kC, bias), NotIdentifiableError);
  FrequencyVsCurrent unordered;
  unordered.rows = {{0.2, {5.0}, {}}, {0.1, {6.0}, {}}};
  EXPECT_THROW(calibrate_angle(unordered, 9.95, kC, bias), InvalidArgumentError);
  FrequencyVsCurrent single;
  single.rows = {{0.2, {5.0}, {}}};
  EXPECT_THROW(calibrate_angle(single, 9.95, kC, bias), InvalidArgumentError);
}

TEST(InvertDc, SiteASeparations) {
  const double theta = radians(51.3);
  const auto slopes = predicted_slopes(kSiteA, dc_slope_constant(kC, theta));
  const auto rep = invert_positions_dc(slopes, theta, 9.95, kC);
  ASSERT_EQ(rep.separations_nm.size(), 2u);
  EXPECT_NEAR(rep.separations_nm[0], 84.0, 0.03 * 84.0);
  EXPECT_NEAR(rep.separations_nm[1], 146.0, 0.03 * 146.0);
  EXPECT_NEAR((rep.radial_positions_um[0] + rep.radial_positions_um[1] + rep.radial_positions_um[2]) / 3.0,
              9.95, 1e-9);
  EXPECT_LT(rep.fit_residual, 1e-9);
  EXPECT_EQ(rep.theta_used_rad, theta);
  EXPECT_EQ(rep.anchor_radius_um, 9.95);
  // Anchored at the true mean the geometry comes back exactly.
  const auto exact = invert_positions_dc(slopes, theta, (9.862 + 9.946 + 10.092) / 3.0, kC);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(exact.radial_positions_um[i], kSiteA[i], 1e-9);
}

TEST(InvertDc, MatchesBruteForceOracle) {
  const double theta = radians(51.3);
  const double k = dc_slope_constant(kC, theta);
  for (double anchor : {3.0, 9.95, 20.0}) {
    const std::vector<double> slopes{1.2, 3.4, 0.5};
    const auto rep = invert_positions_dc(slopes, theta, anchor, kC);
    const auto brute = oracle::brute_force_radii(slopes, k, anchor);
    for (std::size_t i = 0; i < brute.size(); ++i) EXPECT_NEAR(rep.radial_positions_um[i], brute[i], 1e-6);
  }
}

TEST(InvertDc, ZeroSlopeGivesZeroSeparation) {
  const std::vector<double> zero{0.0};
  const auto rep = invert_positions_dc(zero, radians(51.3), 9.95, kC);
  EXPECT_NEAR(rep.separations_nm[0], 0.0, 1e-9);
  const std::vector<double> tiny{1e-6};
  EXPECT_LT(invert_positions_dc(tiny, radians(51.3), 9.95, kC).separations_nm[0], 1e-4);
}

TEST(InvertDc, DoubledSlopesRoughlyDoubleSeparations) {
  const double theta = radians(51.3);
  const double k = dc_slope_constant(kC, theta);
  const auto slopes = predicted_slopes(kSiteA, k);
  const std::vector<double> doubled{2.0 * slopes[0], 2.0 * slopes[1]};
  const auto a = invert_positions_dc(slopes, theta, 9.95, kC);
  const auto b = invert_positions_dc(doubled, theta, 9.95, kC);
  const auto brute = oracle::brute_force_radii(doubled, k, 9.95);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(b.separations_nm[i] / a.separations_nm[i], 2.0, 0.05);
    EXPECT_NEAR(b.separations_nm[i], (brute[i + 1] - brute[i]) * 1000.0, 1e-3);
  }
}

TEST(InvertDc, WeightedAnchor) {
  const double theta = radians(51.3);
  const auto slopes = predicted_slopes(kSiteA, dc_slope_constant(kC, theta));
  const std::vector<double> w{1.0, 2.0, 1.0};
  const auto rep = invert_positions_dc(slopes, theta, 9.95, kC, w);
  const auto& r = rep.radial_positions_um;
  EXPECT_NEAR((r[0] + 2.0 * r[1] + r[2]) / 4.0, 9.95, 1e-9);
}

TEST(InvertDc, Errors) {
  const std::vector<double> slopes{1.0};
  EXPECT_THROW(invert_positions_dc(slopes, radians(51.3), 0.05, kC), InfeasibleAnchorError);
  EXPECT_THROW(invert_positions_dc(slopes, std::numbers::pi / 2, 9.95, kC), NotIdentifiableError);
  const std::vector<double> negative{-1.0};
  EXPECT_THROW(invert_positions_dc(negative, radians(51.3), 9.95, kC), InvalidArgumentError);
  EXPECT_THROW(invert_positions_dc({}, radians(51.3), 9.95, kC), InvalidArgumentError);
  const std::vector<double> bad_w{1.0};
  EXPECT_THROW(invert_positions_dc(slopes, radians(51.3), 9.95, kC, bad_w), InvalidArgumentError);
}

TEST(InvertMw, SiteBSeparation) {
  const auto rep = invert_positions_mw(13.9, radians(49.6), 8.212, kC);
  ASSERT_EQ(rep.radial_positions_um.size(), 2u);
  EXPECT_NEAR(rep.radial_positions_um[0], 8.102, 0.005);
  EXPECT_NEAR(rep.radial_positions_um[1], 8.322, 0.005);
  EXPECT_NEAR(rep.separations_nm[0], 220.0, 3.0);
}

TEST(InvertMw, ZeroSlope) {
  EXPECT_NEAR(invert_positions_mw(0.0, radians(49.6), 8.212, kC).separations_nm[0], 0.0, 1e-9);
}

TEST(InvertMw, AnchorSensitivityIsInverseSquare) {
  const double base = invert_positions_mw(13.9, radians(49.6), 8.212, kC).separations_nm[0];
  const double moved = invert_positions_mw(13.9, radians(49.6), 9.1, kC).separations_nm[0];
  EXPECT_NEAR(moved, base * std::pow(9.1 / 8.212, 2), 0.01 * moved);
  const auto brute = oracle::brute_force_radii({13.9}, mw_slope_constant(kC, radians(49.6)), 9.1);
  EXPECT_NEAR(moved, (brute[1] - brute[0]) * 1000.0, 1e-3);
}

TEST(ReconstructionProperty, GaugeConsistency) {
  const double theta = radians(51.3);
  const double k = dc_slope_constant(kC, theta);
  const std::vector<double> slopes{2.2, 5.1, 0.7, 3.3};
  for (double anchor = 0.5; anchor < 60.0; anchor *= 1.37) {
    const auto rep = invert_positions_dc(slopes, theta, anchor, kC);
    const auto back = predicted_slopes(rep.radial_positions_um, k);
    for (std::size_t i = 0; i < slopes.size(); ++i) {
      EXPECT_LT(std::abs(back[i] - slopes[i]) / slopes[i], 1e-9) << anchor;
    }
    for (std::size_t i = 1; i < rep.radial_positions_um.size(); ++i) {
      EXPECT_GT(rep.radial_positions_um[i], rep.radial_positions_um[i - 1]);
      EXPECT_GT(rep.separations_nm[i - 1], 0.0);
    }
  }
}

TEST(ReconstructionProperty, DcMwParity) {
  const std::vector<double> radii{8.102, 8.322};
  for (double deg : {30.0, 49.6, 51.3, 70.0}) {
    const double th = radians(deg);
    const auto dc = invert_positions_dc(predicted_slopes(radii, dc_slope_constant(kC, th)), th, 8.212, kC);
    const auto mw = invert_positions_mw(predicted_slopes(radii, mw_slope_constant(kC, th))[0], th, 8.212, kC);
    EXPECT_NEAR(dc.separations_nm[0], mw.separations_nm[0], 1e-6);
    EXPECT_NEAR(dc.separations_nm[0], 220.0, 0.05 * 220.0);
  }
}

TEST(Resolution, Examples) {
  EXPECT_NEAR(estimate_resolution(84.0, 0.2, 0.8), 21.0, 1e-12);
  EXPECT_NEAR(estimate_resolution(220.0, 0.040, 0.243), 36.2, 0.05);
  EXPECT_NEAR(estimate_resolution(220.0, 0.040, 0.243), 37.0, 1.0);
  EXPECT_DOUBLE_EQ(estimate_resolution(84.0, 0.5, 0.5), 84.0);
  EXPECT_THROW(estimate_resolution(84.0, 0.9, 0.8), OrderingError);
  EXPECT_THROW(estimate_resolution(84.0, 0.0, 0.8), InvalidArgumentError);
  EXPECT_THROW(estimate_resolution(-1.0, 0.1, 0.8), InvalidArgumentError);
}

TEST(Resolution, Homogeneity) {
  const double base = estimate_resolution(100.0, 0.1, 0.9);
  for (double s : {0.5, 2.0, 3.0}) {
    EXPECT_NEAR(estimate_resolution(100.0 * s, 0.1, 0.9), s * base, 1e-12);
    EXPECT_NEAR(estimate_resolution(100.0, 0.1 * s, 0.9 * 4.0), s / 4.0 * base, 1e-12);
    EXPECT_NEAR(estimate_resolution(100.0, 0.1, 0.9 * s), base / s, 1e-12);
    EXPECT_LE(estimate_resolution(100.0 * s, 0.1, 0.9), 100.0 * s);
  }
}

TEST(Resolution, Projections) {
  EXPECT_NEAR(resolution_projections(21.0, 1000.0, 100000.0), 0.21, 1e-12);
  EXPECT_DOUBLE_EQ(resolution_projections(21.0, 500.0, 500.0), 21.0);
  EXPECT_NEAR(resolution_projections(37.0, 1024.0, 2048.0), 18.5, 1e-12);
  EXPECT_THROW(resolution_projections(21.0, 0.0, 1.0), InvalidArgumentError);
}

TEST(Resolution, WavelengthRatios) {
  const auto a = wavelength_ratios(21.0, 532.0, 10.0, 10.4);
  EXPECT_EQ(a[0].label, "optical");
  EXPECT_NEAR(a[0].raw, 25.33, 0.01);
  EXPECT_EQ(a[0].rounded, 25.0);
  const auto b = wavelength_ratios(37.0, 532.0, 10.0, 10.4);
  EXPECT_EQ(b[0].rounded, 14.0);
  EXPECT_EQ(b[1].label, "mw_effective");
  EXPECT_EQ(b[1].rounded, 270.0);
  EXPECT_EQ(b[2].label, "mw_freespace");
  EXPECT_NEAR(b[2].raw, 2.81e6, 0.01e6);
  EXPECT_EQ(b[2].rounded, 2.8e6);
  EXPECT_THROW(wavelength_ratios(0.0, 532.0, 10.0, 10.4), InvalidArgumentError);
}

TEST(Resolution, NodeWithinWindowDiagnostic) {
  EXPECT_TRUE(node_within_window(0.651, 1024.0));
  EXPECT_FALSE(node_within_window(0.278, 1024.0));
  EXPECT_TRUE(node_within_window(0.5, 1000.0));
}

TEST(LineFits, AffineAndThroughOrigin) {
  const std::vector<double> x{0.04, 0.08, 0.159, 0.207, 0.243};
  std::vector<double> y;
  for (double v : x) y.push_back(13.9 * v + 0.2);
  const auto aff = fit_line_affine(x, y);
  EXPECT_NEAR(aff.slope, 13.9, 1e-9);
  EXPECT_NEAR(aff.intercept, 0.2, 1e-9);
  EXPECT_NEAR(aff.residual_rms, 0.0, 1e-9);
  std::vector<double> y0;
  for (double v : x) y0.push_back(13.9 * v);
  EXPECT_NEAR(fit_line_through_origin(x, y0).slope, 13.9, 1e-12);
  EXPECT_THROW(fit_line_affine(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 2.0}),
               NotIdentifiableError);
  EXPECT_THROW(fit_line_affine(std::vector<double>{1.0}, std::vector<double>{1.0}), InvalidArgumentError);
}
