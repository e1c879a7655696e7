#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace minicar {

/// Physical limits of the car. Defaults are the Minicar's measured constants
/// except max_steer_rate (see steering presets) and the longitudinal
/// acceleration bounds, which the paper does not give.
struct VehicleLimits {
  double wheelbase{0.122};
  double max_steer{0.3141592653589793};  // 18 deg
  double max_steer_rate{1.5};
  double max_speed{1.5};
  double max_accel{1.0};
  double max_decel{2.0};
  double body_length{0.197};
  double body_width{0.081};
  // Kinematic L / tan(max_steer). The measured 0.56 m of the real car is
  // larger than the bicycle model predicts.
  double min_turn_radius{0.37547};

  /// Throws std::invalid_argument naming the first violated bound.
  void validate() const;

  double rear_overhang() const { return 0.5 * (body_length - wheelbase); }
};

/// Steering servo limit as measured on the hardware (rad/s).
inline constexpr double kMeasuredSteerRate = 0.076;

/// "permissive" (default simulation preset) or "measured".
VehicleLimits vehicle_preset(const std::string& name);

struct LaneChangeState {
  int from_lane{0};
  int to_lane{0};
  double progress{0.0};
  // Arc length on from_lane where the manoeuvre began and the longitudinal
  // distance over which it blends.
  double start_s{0.0};
  double distance{0.0};
};

/// Ground-truth state of one car. (x, y) is the rear-axle midpoint.
struct VehicleState {
  double x{0.0};
  double y{0.0};
  double theta{0.0};
  double v{0.0};
  double psi{0.0};
  int lane{0};
  double s{0.0};
  double lateral{0.0};
  std::optional<LaneChangeState> lane_change{};
};

struct Actuation {
  double psi{0.0};
  double v{0.0};
};

/// Rate and range limits on steering and speed commands.
Actuation clamp_actuation(double prev_psi, double desired_psi, double desired_v, double prev_v,
                          double dt, const VehicleLimits& limits);

struct PoseRate {
  double x{0.0};
  double y{0.0};
  double theta{0.0};
};

/// One semi-implicit Euler step of the bicycle model with (v, psi) held.
PoseRate integrate_pose(double x, double y, double theta, double v, double psi, double dt,
                        double wheelbase);

/// Clamps the commands, then advances the pose with the clamped (v, psi).
/// Track coordinates (lane, s, lateral) are left for the caller to refresh.
VehicleState step_kinematics(const VehicleState& state, double commanded_v, double commanded_psi,
                             double dt, const VehicleLimits& limits);

/// Corners of the body footprint, counter-clockwise starting rear-right.
struct Footprint {
  double x[4];
  double y[4];
};

Footprint footprint(double x, double y, double theta, const VehicleLimits& limits);

}  // namespace minicar
