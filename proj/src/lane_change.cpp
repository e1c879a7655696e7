#include "minicar/lane_change.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace minicar {

void MobilParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(politeness >= 0.0 && politeness <= 1.0, "mobil.politeness must be in [0, 1]");
  require(b_safe > 0.0, "mobil.b_safe must be positive");
  require(delta_a_threshold >= 0.0, "mobil.delta_a_threshold must be non-negative");
  require(gamma > 0.0, "mobil.gamma must be positive");
}

MobilParams mobil_preset(const std::string& name) {
  const IdmParams idm = idm_preset(name);
  if (name == "normal") return {0.5, 0.7 * idm.alpha, 0.4, 2.0, false};
  return {1.0, 0.7 * idm.alpha, 0.2, 2.0, false};
}

double LaneChangeModel::accel_behind(double speed, const std::optional<Neighbor>& front) const {
  if (!front) return idm_acceleration(speed, std::nullopt, idm, idm.s0, max_decel);
  const FrontTarget target{front->gap, speed - front->speed, front->speed, 1.0, false};
  return idm_acceleration(speed, target, idm,
                          effective_jam_distance(idm, front->speed, escape_length), max_decel);
}

bool safety_criterion(const std::optional<double>& new_rear_accel_after, double b_safe) {
  if (!new_rear_accel_after) return true;
  return *new_rear_accel_after >= -b_safe;
}

bool incentive_criterion(double da_c, double da_n, double da_o, double politeness,
                         double threshold) {
  return da_c + politeness * (da_n + da_o) > threshold;
}

bool cooperative_gap_guard(double gap, double s0, double gamma, double closing_rate) {
  return gap > s0 + gamma * std::max(closing_rate, 0.0);
}

CandidateEvaluation evaluate_candidate(const LaneChangeContext& ctx, const CandidateLane& cand,
                                       const LaneChangeModel& model) {
  CandidateEvaluation ev;
  ev.lane = cand.lane;
  const double v = ctx.ego_speed;

  ev.a_c_before = model.accel_behind(v, ctx.current_front);
  ev.a_c_after = model.accel_behind(v, cand.new_front);

  std::optional<double> rear_after;
  if (cand.new_rear) {
    ev.a_n_before = model.accel_behind(cand.new_rear->speed, cand.new_rear->front_without_ego);
    ev.a_n_after = model.accel_behind(cand.new_rear->speed, Neighbor{cand.new_rear->gap_to_ego, v});
    rear_after = ev.a_n_after;
  }
  if (ctx.old_rear) {
    ev.a_o_before = model.accel_behind(ctx.old_rear->speed, Neighbor{ctx.old_rear->gap_to_ego, v});
    ev.a_o_after = model.accel_behind(ctx.old_rear->speed, ctx.old_rear->front_without_ego);
  }

  ev.safe = safety_criterion(rear_after, model.safe_braking());
  ev.incentive = incentive_criterion(ev.a_c_after - ev.a_c_before, ev.a_n_after - ev.a_n_before,
                                     ev.a_o_after - ev.a_o_before, model.mobil.politeness,
                                     model.mobil.delta_a_threshold);
  if (cand.new_front) {
    ev.escape_guard = cand.new_front->gap >
                      effective_jam_distance(model.idm, cand.new_front->speed, model.escape_length);
  }
  if (model.mobil.cooperative) {
    ev.request_incentive = incentive_criterion(ev.a_c_after - ev.a_c_before, 0.0,
                                               ev.a_o_after - ev.a_o_before, model.mobil.politeness,
                                               model.mobil.delta_a_threshold);
    if (cand.new_front) {
      ev.cooperative_guard = cooperative_gap_guard(cand.new_front->gap, model.idm.s0,
                                                   model.mobil.gamma, v - cand.new_front->speed);
    }
    if (cand.new_rear && ev.cooperative_guard) {
      ev.cooperative_guard = cooperative_gap_guard(cand.new_rear->gap_to_ego, model.idm.s0,
                                                   model.mobil.gamma, cand.new_rear->speed - v);
    }
  }
  return ev;
}

LaneChangeDecision evaluate_lane_change(const LaneChangeContext& ctx,
                                        const LaneChangeModel& model) {
  LaneChangeDecision decision;
  for (const auto& cand : ctx.candidates) {
    decision.evaluations.push_back(evaluate_candidate(ctx, cand, model));
  }
  for (const auto& ev : decision.evaluations) {
    if (ev.passes()) {
      decision.outcome = LaneChangeDecision::Outcome::kChange;
      decision.target_lane = ev.lane;
      return decision;
    }
  }
  for (const auto& ev : decision.evaluations) {
    if (ev.incentive || ev.request_incentive) {
      decision.outcome = LaneChangeDecision::Outcome::kDesire;
      decision.target_lane = ev.lane;
      return decision;
    }
  }
  return decision;
}

double smoothstep(double u) {
  const double c = std::clamp(u, 0.0, 1.0);
  return c * c * (3.0 - 2.0 * c);
}

LaneChangePath::LaneChangePath(const Track& track, int from_lane, int to_lane, double start_s,
                               double distance)
    : from_(&track.lane(from_lane)),
      to_lane_(to_lane),
      start_s_(track.lane(from_lane).wrap(start_s)),
      distance_(distance),
      full_offset_(-static_cast<double>(to_lane - from_lane) * track.lane_spacing()) {
  track.lane(to_lane);
  if (std::abs(to_lane - from_lane) != 1) {
    throw TrackError("lane change between non-adjacent lanes " + std::to_string(from_lane) +
                     " and " + std::to_string(to_lane));
  }
  if (!(distance > 0.0)) throw TrackError("lane change distance must be positive");
}

double LaneChangePath::progress_at(double s) const {
  const double along = std::remainder(s - start_s_, from_->length());
  return std::clamp(along / distance_, 0.0, 1.0);
}

double LaneChangePath::offset_at_progress(double u) const { return full_offset_ * smoothstep(u); }

LaneChangePath::Offset LaneChangePath::offset(double s) const {
  const double along = std::remainder(s - start_s_, from_->length());
  const double u = along / distance_;
  if (u <= 0.0) return {0.0, 0.0, 0.0};
  if (u >= 1.0) return {full_offset_, 0.0, 0.0};
  return {full_offset_ * u * u * (3.0 - 2.0 * u), full_offset_ * 6.0 * u * (1.0 - u) / distance_,
          full_offset_ * 6.0 * (1.0 - 2.0 * u) / (distance_ * distance_)};
}

LanePose LaneChangePath::pose_at(double s) const {
  const LanePose c = from_->pose_at(s);
  const Offset o = offset(s);
  const double k = c.kappa;
  const double a = 1.0 - k * o.o;
  const double num = a * a * k + a * o.d2 + 2.0 * k * o.d1 * o.d1;
  const double den = std::pow(a * a + o.d1 * o.d1, 1.5);
  return {c.x - o.o * std::sin(c.theta), c.y + o.o * std::cos(c.theta),
          c.theta + std::atan2(o.d1, a), num / den};
}

ReferenceProjection LaneChangePath::project(double x, double y, double max_offset) const {
  // Start from the source-lane projection and refine with Newton steps on
  // (q - P(s)) . P'(s) = 0.
  double s = from_->project(x, y, max_offset + std::abs(full_offset_)).s_d;
  for (int iter = 0; iter < 8; ++iter) {
    const LanePose c = from_->pose_at(s);
    const Offset o = offset(s);
    const double ct = std::cos(c.theta), st = std::sin(c.theta);
    const double px = c.x - o.o * st, py = c.y + o.o * ct;
    const double a = 1.0 - c.kappa * o.o;
    // P' and P'' in world coordinates.
    const double d1x = a * ct - o.d1 * st, d1y = a * st + o.d1 * ct;
    const double t2 = -2.0 * c.kappa * o.d1;
    const double n2 = a * c.kappa + o.d2;
    const double d2x = t2 * ct - n2 * st, d2y = t2 * st + n2 * ct;
    const double f = (x - px) * d1x + (y - py) * d1y;
    const double df = -(d1x * d1x + d1y * d1y) + (x - px) * d2x + (y - py) * d2y;
    if (std::abs(df) < 1e-12) break;
    const double step = std::clamp(-f / df, -0.05, 0.05);
    s = from_->wrap(s + step);
    if (std::abs(step) < 1e-13) break;
  }
  const LanePose p = pose_at(s);
  ReferenceProjection r;
  r.s_d = s;
  r.x_d = p.x;
  r.y_d = p.y;
  r.theta_d = p.theta;
  r.kappa = p.kappa;
  r.lateral_error = -(x - p.x) * std::sin(p.theta) + (y - p.y) * std::cos(p.theta);
  if (std::abs(r.lateral_error) > max_offset) {
    throw LostVehicleError("vehicle left the lane-change corridor");
  }
  return r;
}

LaneChangePath lane_change_path(const Track& track, int from_lane, int to_lane, double start_s,
                                double v_at_start, double gamma, double min_distance) {
  return LaneChangePath(track, from_lane, to_lane, start_s,
                        std::max(v_at_start * gamma, min_distance));
}

}  // namespace minicar
