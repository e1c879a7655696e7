#include "minicar/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace minicar {

void VehicleLimits::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(wheelbase > 0.0, "vehicle.wheelbase must be positive");
  require(max_steer > 0.0 && max_steer < std::numbers::pi / 2.0,
          "vehicle.max_steer must be in (0, pi/2)");
  require(max_steer_rate > 0.0, "vehicle.max_steer_rate must be positive");
  require(max_speed > 0.0, "vehicle.max_speed must be positive");
  require(max_accel > 0.0, "vehicle.max_accel must be positive");
  require(max_decel > 0.0, "vehicle.max_decel must be positive");
  require(body_length > 0.0, "vehicle.body_length must be positive");
  require(body_width > 0.0, "vehicle.body_width must be positive");
  require(min_turn_radius > 0.0, "vehicle.min_turn_radius must be positive");
  const double kinematic = wheelbase / std::tan(max_steer);
  require(std::abs(kinematic - min_turn_radius) <= 0.05 * min_turn_radius,
          "vehicle.min_turn_radius differs from wheelbase/tan(max_steer) by more than 5%");
}

VehicleLimits vehicle_preset(const std::string& name) {
  VehicleLimits limits;
  if (name == "permissive") return limits;
  if (name == "measured") {
    limits.max_steer_rate = kMeasuredSteerRate;
    return limits;
  }
  throw std::invalid_argument("unknown vehicle preset '" + name + "'");
}

Actuation clamp_actuation(double prev_psi, double desired_psi, double desired_v, double prev_v,
                          double dt, const VehicleLimits& limits) {
  const double dpsi = limits.max_steer_rate * dt;
  double psi = std::clamp(desired_psi, prev_psi - dpsi, prev_psi + dpsi);
  psi = std::clamp(psi, -limits.max_steer, limits.max_steer);

  double v = std::clamp(desired_v, prev_v - limits.max_decel * dt, prev_v + limits.max_accel * dt);
  v = std::clamp(v, 0.0, limits.max_speed);
  return {psi, v};
}

PoseRate integrate_pose(double x, double y, double theta, double v, double psi, double dt,
                        double wheelbase) {
  return {x + v * std::cos(theta) * dt, y + v * std::sin(theta) * dt,
          theta + v * std::tan(psi) / wheelbase * dt};
}

VehicleState step_kinematics(const VehicleState& state, double commanded_v, double commanded_psi,
                             double dt, const VehicleLimits& limits) {
  const Actuation a = clamp_actuation(state.psi, commanded_psi, commanded_v, state.v, dt, limits);
  VehicleState next = state;
  const PoseRate p = integrate_pose(state.x, state.y, state.theta, a.v, a.psi, dt, limits.wheelbase);
  next.x = p.x;
  next.y = p.y;
  next.theta = std::remainder(p.theta, 2.0 * std::numbers::pi);
  next.v = a.v;
  next.psi = a.psi;
  return next;
}

Footprint footprint(double x, double y, double theta, const VehicleLimits& limits) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double back = -limits.rear_overhang();
  const double front = limits.wheelbase + limits.rear_overhang();
  const double half = 0.5 * limits.body_width;
  const double lx[4] = {back, front, front, back};
  const double ly[4] = {-half, -half, half, half};
  Footprint f{};
  for (int i = 0; i < 4; ++i) {
    f.x[i] = x + lx[i] * c - ly[i] * s;
    f.y[i] = y + lx[i] * s + ly[i] * c;
  }
  return f;
}

}  // namespace minicar
