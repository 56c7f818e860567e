#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "nvmri/field_model.hpp"
#include "nvmri/scene.hpp"

using namespace nvmri;

namespace {

const SpinConstants kC{};
const double kTheta513 = radians(51.3);
const double kTheta496 = radians(49.6);

WireSpec dc(double current) { return {0.0, 0.0, current, WireKind::dc_gradient}; }
WireSpec mw(double current) { return {0.0, 0.0, current, WireKind::mw_stripline}; }

}  // namespace

TEST(FieldModel, ZeroCurrentGivesZeroField) {
  const auto b = wire_field(dc(0.0), {3.0, 1.0});
  EXPECT_EQ(b.magnitude(), 0.0);
}

TEST(FieldModel, OneAmpAtTwoMicrons) {
  EXPECT_NEAR(wire_field(dc(1.0), {2.0, 0.0}).magnitude(), 1000.0, 1e-9);
  EXPECT_NEAR(wire_field(dc(1.0), {0.0, -2.0}).magnitude(), 1000.0, 1e-9);
}

TEST(FieldModel, AxialProjectionAtSixteenHundredMilliamps) {
  EXPECT_NEAR(axial_projection(dc(1.6), {9.95, 0.0, kTheta513}), 201.1, 0.05);
}

TEST(FieldModel, AxialProjectionExamples) {
  EXPECT_NEAR(axial_projection(dc(1.0), {5.0, 0.0, std::numbers::pi / 2}), 0.0, 1e-12);
  EXPECT_NEAR(axial_projection(dc(1.0), {1.0, 0.0, kTheta513}), 1250.5, 0.05);
  // 2000 * 0.2 / 9.95 = 40.20 G total, of which 25.14 G lies along the axis.
  EXPECT_NEAR(wire_field(dc(0.2), {9.95, 0.0, kTheta513}).magnitude(), 40.20, 0.005);
  EXPECT_NEAR(axial_projection(dc(0.2), {9.95, 0.0, kTheta513}), 25.14, 0.005);
}

TEST(FieldModel, TotalFieldBiasOnly) {
  const BiasField bias{18.0};
  const auto b = total_field(bias, {}, {1.0, 1.0});
  EXPECT_EQ(b.bx, 0.0);
  EXPECT_EQ(b.by, 0.0);
  EXPECT_EQ(b.bz, 18.0);
}

TEST(FieldModel, TotalFieldVectorSum) {
  const BiasField bias{18.0};
  // Choose the current so |B_wire| = 25.1 G at r = 9.95 um.
  const std::vector<WireSpec> wires{dc(25.1 * 9.95 / 2000.0)};
  const auto b = total_field(bias, wires, {9.95, 0.0, kTheta513});
  EXPECT_NEAR(b.bx, 19.6, 0.05);
  EXPECT_NEAR(b.by, 0.0, 1e-12);
  EXPECT_NEAR(b.bz, 33.7, 0.05);
  EXPECT_NEAR(b.bx, 25.1 * std::sin(kTheta513), 1e-9);
  EXPECT_NEAR(b.bz, 18.0 + 25.1 * std::cos(kTheta513), 1e-9);
}

TEST(FieldModel, OppositeCurrentsCancel) {
  const BiasField bias{18.0};
  // Co-located wires with opposite currents cancel everywhere.
  const std::vector<WireSpec> colocated{{1.0, 2.0, 0.3}, {1.0, 2.0, -0.3}};
  const auto b = total_field(bias, colocated, {4.0, -3.0});
  EXPECT_NEAR(b.bx, 0.0, 1e-12);
  EXPECT_NEAR(b.bz, 18.0, 1e-12);
  // Parallel wires carrying the same current cancel on the midplane between them.
  const std::vector<WireSpec> pair{{-5.0, 0.0, 0.3}, {5.0, 0.0, 0.3}};
  const auto m = total_field(bias, pair, {0.0, 0.0});
  EXPECT_NEAR(m.bx, 0.0, 1e-12);
  EXPECT_NEAR(m.bz, 18.0, 1e-12);
}

TEST(FieldModel, RabiCalibrationPoints) {
  const double w = rabi_frequency(kC, mw(0.243), {9.1, 0.0, kTheta496});
  EXPECT_NEAR(w, 113.9, 0.05);
  EXPECT_LT(std::abs(w - 114.25) / 114.25, 0.01);
  EXPECT_NEAR(rabi_frequency(kC, mw(0.243), {8.212, 0.0, kTheta496}), 126.2, 0.05);
}

TEST(FieldModel, UltrafastRabiConversion) {
  const double b1 = transverse_field_for_rabi(kC, 732.0);
  EXPECT_NEAR(b1, 261.4, 0.05);
  EXPECT_LT(std::abs(b1 - 261.0) / 261.0, 0.005);
  EXPECT_LT(std::abs(kC.gamma_mhz_per_gauss * 261.0 - 732.0) / 732.0, 0.005);
}

TEST(FieldModel, Errors) {
  EXPECT_THROW(wire_field(dc(1.0), {0.04, 0.0}), DegeneratePointError);
  EXPECT_THROW(axial_projection(dc(1.0), {0.0, 0.0}), DegeneratePointError);
  EXPECT_THROW(rabi_frequency(kC, dc(0.1), {5.0, 0.0}), WrongWireKindError);
  EXPECT_THROW(wire_field(dc(INFINITY), {5.0, 0.0}), InvalidArgumentError);
  BiasField bad{10.0, {1.0, 1.0, 0.0}};
  EXPECT_THROW(bad.validate(), InvalidArgumentError);
}

TEST(FieldModelProperty, InverseRadiusLaw) {
  for (double r = 0.5; r < 50.0; r *= 1.7) {
    const double near = wire_field(dc(0.37), {r, 0.0}).magnitude();
    const double far = wire_field(dc(0.37), {2.0 * r, 0.0}).magnitude();
    EXPECT_DOUBLE_EQ(near, 2.0 * far);
  }
}

TEST(FieldModelProperty, LinearInCurrent) {
  const ProbePoint p{7.0, 2.0, kTheta496};
  const double base = rabi_frequency(kC, mw(0.1), p);
  const double axial = axial_projection(dc(0.1), p);
  for (double k : {-2.0, 0.5, 3.0, 10.0}) {
    EXPECT_NEAR(rabi_frequency(kC, mw(0.1 * k), p), std::abs(k) * base, 1e-10 * std::abs(k) * base);
    EXPECT_NEAR(axial_projection(dc(0.1 * k), p), k * axial, 1e-10 * std::abs(k * axial));
  }
}

TEST(FieldModelProperty, AzimuthalGeometry) {
  const WireSpec w{1.0, -2.0, 0.25};
  for (double ang = 0.1; ang < 6.28; ang += 0.5) {
    const ProbePoint p{1.0 + 3.0 * std::cos(ang), -2.0 + 3.0 * std::sin(ang)};
    const auto b = wire_field(w, p);
    EXPECT_NEAR(b.magnitude(), 2000.0 * 0.25 / 3.0, 1e-9);
    // Perpendicular to the radial vector.
    EXPECT_NEAR(b.bx * std::cos(ang) + b.bz * std::sin(ang), 0.0, 1e-9);
    EXPECT_NEAR(axial_projection(w, p), b.bz, 1e-12 * b.magnitude());
    // Positive current along +y circulates as y x rho.
    EXPECT_NEAR(b.bx, b.magnitude() * std::sin(ang), 1e-9);
  }
}

TEST(FieldModelProperty, OverrideConsistency) {
  for (double th = 0.0; th <= std::numbers::pi; th += 0.2) {
    const ProbePoint p{6.0, 0.0, th};
    const auto b = wire_field(dc(0.5), p);
    EXPECT_NEAR(axial_projection(dc(0.5), p), b.bz, 1e-12);
    EXPECT_NEAR(b.bx, b.magnitude() * std::sin(th), 1e-9);
  }
}
