#pragma once

#include "minicar/track.hpp"
#include "minicar/vehicle.hpp"

namespace minicar {

/// Look-ahead lengths of the lateral tracking law.
struct TrackerParams {
  double l1{0.122};
  double l2{2.3 * 0.122};

  static TrackerParams for_wheelbase(double wheelbase) { return {wheelbase, 2.3 * wheelbase}; }
};

struct PidParams {
  double kp{2.0};
  double ki{0.5};
  double kd{0.0};
  // Bound on the magnitude of the integral term's contribution (m/s^2).
  double integral_limit{0.5};
};

struct PidState {
  double integral{0.0};
  double prev_error{0.0};
  bool has_prev{false};
};

struct Point2 {
  double x{0.0};
  double y{0.0};
};

/// Steering angle of a reference car riding the curve: arctan(l1 * kappa).
double reference_steering(double kappa, double l1);

Point2 target_point(const ReferenceProjection& proj, double psi_d, const TrackerParams& params);

/// Steering angle towards the target point, in (-pi, pi]. The target is
/// expressed relative to the rear axle before the law is applied.
double steering_command(const Pose2& pose, const Point2& target, const TrackerParams& params);

/// Velocity PID. Returns an acceleration command clamped to the vehicle's
/// acceleration limits.
double velocity_pid(double v_measured, double v_setpoint, PidState& state, double dt,
                    const PidParams& params, const VehicleLimits& limits);

/// Full lateral law: projection -> reference steering -> target -> command.
double lateral_control(const Pose2& pose, const ReferenceProjection& proj,
                       const TrackerParams& params);

}  // namespace minicar
