#include "minicar/tracking.hpp"

#include <algorithm>
#include <cmath>

namespace minicar {

double reference_steering(double kappa, double l1) { return std::atan(l1 * kappa); }

Point2 target_point(const ReferenceProjection& proj, double psi_d, const TrackerParams& params) {
  return {proj.x_d + params.l1 * std::cos(proj.theta_d) + params.l2 * std::cos(proj.theta_d + psi_d),
          proj.y_d + params.l1 * std::sin(proj.theta_d) + params.l2 * std::sin(proj.theta_d + psi_d)};
}

double steering_command(const Pose2& pose, const Point2& target, const TrackerParams& params) {
  const double xt = target.x - pose.x;
  const double yt = target.y - pose.y;
  const double psi = std::atan2(yt - params.l1 * std::sin(pose.theta),
                                xt - params.l1 * std::cos(pose.theta)) -
                     pose.theta;
  return wrap_angle(psi);
}

double velocity_pid(double v_measured, double v_setpoint, PidState& state, double dt,
                    const PidParams& params, const VehicleLimits& limits) {
  const double error = v_setpoint - v_measured;
  state.integral += error * dt;
  if (params.ki > 0.0) {
    const double bound = params.integral_limit / params.ki;
    state.integral = std::clamp(state.integral, -bound, bound);
  }
  const double derivative = state.has_prev ? (error - state.prev_error) / dt : 0.0;
  state.prev_error = error;
  state.has_prev = true;
  const double out = params.kp * error + params.ki * state.integral + params.kd * derivative;
  return std::clamp(out, -limits.max_decel, limits.max_accel);
}

double lateral_control(const Pose2& pose, const ReferenceProjection& proj,
                       const TrackerParams& params) {
  const double psi_d = reference_steering(proj.kappa, params.l1);
  return steering_command(pose, target_point(proj, psi_d, params), params);
}

}  // namespace minicar
