#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "minicar/vehicle.hpp"

using namespace minicar;

TEST(Vehicle, DefaultLimitsAreConsistent) {
  const VehicleLimits lim;
  EXPECT_NO_THROW(lim.validate());
  EXPECT_NEAR(lim.min_turn_radius, lim.wheelbase / std::tan(lim.max_steer), 1e-4);
  EXPECT_NEAR(lim.rear_overhang(), (0.197 - 0.122) / 2, 1e-15);
}

TEST(Vehicle, PresetsDifferOnlyInSteerRate) {
  const VehicleLimits a = vehicle_preset("permissive");
  const VehicleLimits b = vehicle_preset("measured");
  EXPECT_DOUBLE_EQ(b.max_steer_rate, 0.076);
  EXPECT_DOUBLE_EQ(a.max_steer, b.max_steer);
  EXPECT_DOUBLE_EQ(a.wheelbase, b.wheelbase);
  EXPECT_THROW(vehicle_preset("racing"), std::invalid_argument);
}

TEST(Vehicle, ValidateNamesTheBadField) {
  VehicleLimits lim;
  lim.min_turn_radius = 0.56;
  try {
    lim.validate();
    FAIL() << "expected a throw";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("min_turn_radius"), std::string::npos);
  }
  lim = VehicleLimits{};
  lim.max_steer = 2.0;
  EXPECT_THROW(lim.validate(), std::invalid_argument);
}

// The clamp chain must hold for any request: rate first, then range.
TEST(Vehicle, ClampChainHoldsForRandomRequests) {
  VehicleLimits lim = vehicle_preset("measured");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> any(-5.0, 5.0);
  const double dt = 0.01;
  double psi = 0.0, v = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const Actuation a = clamp_actuation(psi, any(rng), any(rng), v, dt, lim);
    EXPECT_LE(std::abs(a.psi - psi), lim.max_steer_rate * dt + 1e-15);
    EXPECT_LE(std::abs(a.psi), lim.max_steer);
    EXPECT_LE(a.v - v, lim.max_accel * dt + 1e-15);
    EXPECT_LE(v - a.v, lim.max_decel * dt + 1e-15);
    EXPECT_GE(a.v, 0.0);
    EXPECT_LE(a.v, lim.max_speed);
    psi = a.psi;
    v = a.v;
  }
}

TEST(Vehicle, IntegrationIsOneEulerStep) {
  const PoseRate p = integrate_pose(1.0, 2.0, 0.3, 0.5, 0.1, 0.01, 0.122);
  EXPECT_DOUBLE_EQ(p.x, 1.0 + 0.5 * std::cos(0.3) * 0.01);
  EXPECT_DOUBLE_EQ(p.y, 2.0 + 0.5 * std::sin(0.3) * 0.01);
  EXPECT_DOUBLE_EQ(p.theta, 0.3 + 0.5 * std::tan(0.1) / 0.122 * 0.01);
}

TEST(Vehicle, FullLockTracesTheMinimumTurningCircle) {
  const VehicleLimits lim;
  VehicleState s;
  s.v = 0.3;
  s.psi = lim.max_steer;
  const double dt = 1e-4;
  const double radius = lim.wheelbase / std::tan(lim.max_steer);
  // Centre of the circle is to the left of the starting rear axle.
  const double cx = 0.0, cy = radius;
  const int steps = static_cast<int>(2 * M_PI * radius / (s.v * dt));
  double worst = 0.0;
  for (int i = 0; i < steps; ++i) {
    s = step_kinematics(s, 0.3, lim.max_steer, dt, lim);
    worst = std::max(worst, std::abs(std::hypot(s.x - cx, s.y - cy) - radius));
  }
  EXPECT_LT(worst, 1e-4);
  EXPECT_NEAR(s.x, 0.0, 1e-3);
  EXPECT_NEAR(s.y, 0.0, 1e-3);
}

TEST(Vehicle, StepKinematicsKeepsHeadingWrapped) {
  const VehicleLimits lim;
  VehicleState s;
  s.theta = 3.14;
  s.v = 1.0;
  s.psi = lim.max_steer;
  for (int i = 0; i < 100; ++i) s = step_kinematics(s, 1.0, lim.max_steer, 0.01, lim);
  EXPECT_LE(std::abs(s.theta), M_PI);
}

TEST(Vehicle, FootprintCornersMatchHandComputedRectangle) {
  const VehicleLimits lim;
  const Footprint f = footprint(0.0, 0.0, 0.0, lim);
  const double oh = lim.rear_overhang();
  EXPECT_NEAR(f.x[0], -oh, 1e-15);
  EXPECT_NEAR(f.y[0], -lim.body_width / 2, 1e-15);
  EXPECT_NEAR(f.x[1], lim.wheelbase + oh, 1e-15);
  EXPECT_NEAR(f.x[2] - f.x[3], lim.body_length, 1e-15);
  EXPECT_NEAR(f.y[2], lim.body_width / 2, 1e-15);

  // A quarter turn maps local +x onto global +y.
  const Footprint g = footprint(1.0, 1.0, M_PI / 2, lim);
  EXPECT_NEAR(g.x[1], 1.0 + lim.body_width / 2, 1e-12);
  EXPECT_NEAR(g.y[1], 1.0 + lim.wheelbase + oh, 1e-12);
}
