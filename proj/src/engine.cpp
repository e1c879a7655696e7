#include "minicar/engine.hpp"

#include <algorithm>
#include <stdexcept>
#include <cmath>
#include <limits>

namespace minicar {

namespace {

constexpr double kUnbounded = std::numeric_limits<double>::infinity();
// Beyond this along-lane gap the body-aware gap to a leader being left
// behind is not needed; the plain lane gap is used instead.
constexpr double kBandRange = 1.0;

ScenarioConfig validated(ScenarioConfig config) {
  config.validate();
  return config;
}

struct Vec2 {
  double x, y;
};

// Keeps the part of a convex polygon with n.p <= limit (Sutherland-Hodgman).
std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& poly, double nx, double ny,
                                  double limit) {
  std::vector<Vec2> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    const double dp = nx * p.x + ny * p.y - limit;
    const double dq = nx * q.x + ny * q.y - limit;
    if (dp <= 0.0) out.push_back(p);
    if ((dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0)) {
      const double t = dp / (dp - dq);
      out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
    }
  }
  return out;
}

std::seed_seq::result_type low32(std::uint64_t v) {
  return static_cast<std::seed_seq::result_type>(v & 0xffffffffULL);
}

}  // namespace

std::string to_string(ControlMode mode) {
  switch (mode) {
    case ControlMode::kManual:
      return "manual";
    case ControlMode::kSemiAutomatic:
      return "semi_automatic";
    case ControlMode::kAutomatic:
      return "automatic";
  }
  return "automatic";
}

std::optional<ControlMode> parse_control_mode(const std::string& text) {
  if (text == "manual") return ControlMode::kManual;
  if (text == "semi_automatic") return ControlMode::kSemiAutomatic;
  if (text == "automatic") return ControlMode::kAutomatic;
  return std::nullopt;
}

bool footprints_overlap(const Footprint& a, const Footprint& b) {
  constexpr double kTol = 1e-12;
  const Footprint* rects[2] = {&a, &b};
  for (const Footprint* r : rects) {
    for (int e = 0; e < 2; ++e) {
      double ax = r->x[e + 1] - r->x[e];
      double ay = r->y[e + 1] - r->y[e];
      const double norm = std::hypot(ax, ay);
      ax /= norm;
      ay /= norm;
      double min_a = kUnbounded, max_a = -kUnbounded, min_b = kUnbounded, max_b = -kUnbounded;
      for (int k = 0; k < 4; ++k) {
        const double pa = a.x[k] * ax + a.y[k] * ay;
        const double pb = b.x[k] * ax + b.y[k] * ay;
        min_a = std::min(min_a, pa);
        max_a = std::max(max_a, pa);
        min_b = std::min(min_b, pb);
        max_b = std::max(max_b, pb);
      }
      if (max_a <= min_b + kTol || max_b <= min_a + kTol) return false;
    }
  }
  return true;
}

std::vector<CollisionPair> detect_collisions(const std::vector<Footprint>& bodies) {
  std::vector<CollisionPair> hits;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    for (std::size_t j = i + 1; j < bodies.size(); ++j) {
      const double dx = bodies[i].x[0] - bodies[j].x[0];
      const double dy = bodies[i].y[0] - bodies[j].y[0];
      // Corner-to-corner distance above two diagonals rules out contact.
      const double diag = std::hypot(bodies[i].x[2] - bodies[i].x[0], bodies[i].y[2] - bodies[i].y[0]);
      if (dx * dx + dy * dy > 4.0 * diag * diag) continue;
      if (footprints_overlap(bodies[i], bodies[j])) {
        hits.push_back({static_cast<int>(i), static_cast<int>(j)});
      }
    }
  }
  return hits;
}

std::optional<double> band_gap(const Pose2& follower, const Pose2& leader,
                               const VehicleLimits& limits, double margin) {
  const Footprint fp = footprint(follower.x, follower.y, follower.theta, limits);
  const double c = std::cos(leader.theta), s = std::sin(leader.theta);
  std::vector<Vec2> poly;
  for (int k = 0; k < 4; ++k) {
    const double dx = fp.x[k] - leader.x, dy = fp.y[k] - leader.y;
    poly.push_back({dx * c + dy * s, -dx * s + dy * c});
  }
  const double band = 0.5 * limits.body_width + margin;
  poly = clip_half_plane(poly, 0.0, 1.0, band);
  if (!poly.empty()) poly = clip_half_plane(poly, 0.0, -1.0, band);
  if (poly.empty()) return std::nullopt;
  double front = -kUnbounded;
  for (const auto& p : poly) front = std::max(front, p.x);
  return -limits.rear_overhang() - front;
}

Simulation::Simulation(ScenarioConfig config)
    : config_(validated(std::move(config))), track_(build_track(config_.track)) {
  ekf_.wheelbase = config_.vehicle.wheelbase;
  const auto& q = config_.sensing.process_noise;
  const auto& r = config_.sensing.measurement_noise;
  ekf_.process_noise = StateVector(q[0], q[1], q[2], q[3], q[4]).asDiagonal();
  ekf_.measurement_noise = Eigen::Vector3d(r[0], r[1], r[2]).asDiagonal();
  total_ticks_ = std::llround(config_.duration / config_.dt);
  place_vehicles();
  record_state();
}

void Simulation::place_vehicles() {
  const int lanes = static_cast<int>(track_.lane_count());
  const int base = config_.fleet.count / lanes;
  const int extra = config_.fleet.count % lanes;
  const auto& sigma = config_.sensing.initial_sigma;
  const StateVector initial_sigma(sigma[0], sigma[1], sigma[2], sigma[3], sigma[4]);
  const auto mode = parse_control_mode(config_.game.initial_mode).value_or(ControlMode::kAutomatic);

  int id = 0;
  for (int lane_id = 0; lane_id < lanes; ++lane_id) {
    const Lane& lane = track_.lane(lane_id);
    const int n = base + (lane_id < extra ? 1 : 0);
    // Odd lanes are staggered by half a slot so neighbours do not start abreast.
    const double stagger = (lane_id % 2 == 1) ? 0.5 : 0.0;
    for (int k = 0; k < n; ++k, ++id) {
      Vehicle v;
      v.id = id;
      const double s = lane.wrap((k + stagger) * lane.length() / n);
      const LanePose p = lane.pose_at(s);
      v.truth.x = p.x;
      v.truth.y = p.y;
      v.truth.theta = p.theta;
      v.truth.v = config_.fleet.initial_speed;
      v.truth.psi = std::clamp(std::atan(config_.vehicle.wheelbase * p.kappa),
                               -config_.vehicle.max_steer, config_.vehicle.max_steer);
      v.truth.lane = lane_id;
      v.truth.s = s;
      std::seed_seq seq{low32(config_.seed), low32(config_.seed >> 32),
                        static_cast<std::seed_seq::result_type>(id)};
      v.rng.seed(seq);
      v.estimate = estimator_from_truth(v.truth, initial_sigma);
      v.v_set = config_.fleet.initial_speed;
      v.gamified = std::find(config_.fleet.gamified.begin(), config_.fleet.gamified.end(), id) !=
                   config_.fleet.gamified.end();
      if (v.gamified) v.mode = mode;
      v.manual_throttle = 2.0 * config_.fleet.initial_speed / config_.game.manual_max_speed - 1.0;
      vehicles_.push_back(std::move(v));
    }
  }
}

void Simulation::emit(SimEvent e) { events_.push_back(std::move(e)); }

void Simulation::submit(const Command& command) { pending_commands_.push_back(command); }

void Simulation::apply_scripted_events() {
  const double now = time() + 1e-9;
  while (next_scripted_ < config_.events.size() && config_.events[next_scripted_].t <= now) {
    const auto& e = config_.events[next_scripted_++];
    Vehicle& v = vehicles_[static_cast<std::size_t>(e.vehicle)];
    v.stopped = e.type == "stop";
    emit({tick_, time(), e.type, e.vehicle, -1, v.truth.lane, "scripted"});
  }
}

void Simulation::apply_commands() {
  while (!pending_commands_.empty()) {
    const Command c = pending_commands_.front();
    pending_commands_.pop_front();
    command_log_.emplace_back(tick_, c);
    apply_command(c);
  }
}

void Simulation::apply_command(const Command& c) {
  if (c.vehicle < 0 || c.vehicle >= static_cast<int>(vehicles_.size()) ||
      !vehicles_[static_cast<std::size_t>(c.vehicle)].gamified) {
    emit({tick_, time(), "command_rejected", c.vehicle, -1, -1, "vehicle is not played"});
    return;
  }
  Vehicle& v = vehicles_[static_cast<std::size_t>(c.vehicle)];
  switch (c.type) {
    case Command::Type::kModeSwitch: {
      if (c.mode == v.mode) return;
      if (c.mode == ControlMode::kManual && v.path) {
        emit({tick_, time(), "lane_change_abandon", v.id, -1, v.truth.lane_change->to_lane,
              "manual takeover"});
        v.path.reset();
        v.truth.lane_change.reset();
      }
      if (c.mode == ControlMode::kManual) {
        v.intent.reset();
        v.manual_throttle = 2.0 * v.truth.v / config_.game.manual_max_speed - 1.0;
        v.manual_steer = v.truth.psi / config_.vehicle.max_steer;
      } else if (v.mode == ControlMode::kManual) {
        v.v_set = v.truth.v;
        v.pid = PidState{};
      }
      v.mode = c.mode;
      emit({tick_, time(), "mode_change", v.id, -1, v.truth.lane, to_string(c.mode)});
      return;
    }
    case Command::Type::kManual:
      if (v.mode != ControlMode::kManual) {
        emit({tick_, time(), "command_ignored", v.id, -1, -1, "manual input outside manual mode"});
        return;
      }
      v.manual_throttle = std::clamp(c.throttle, -1.0, 1.0);
      v.manual_steer = std::clamp(c.steer, -1.0, 1.0);
      return;
    case Command::Type::kSemiAutomatic:
      if (v.mode != ControlMode::kSemiAutomatic) {
        emit({tick_, time(), "command_ignored", v.id, -1, -1,
              "semi-automatic input outside semi_automatic mode"});
        return;
      }
      if (c.speed_setpoint) {
        v.semi_speed = std::clamp(*c.speed_setpoint, 0.0, config_.vehicle.max_speed);
      }
      if (c.lane_change != 0) v.lane_change_request = c.lane_change < 0 ? -1 : 1;
      return;
    case Command::Type::kStop:
    case Command::Type::kResume:
      v.stopped = c.type == Command::Type::kStop;
      emit({tick_, time(), v.stopped ? "stop" : "resume", v.id, -1, v.truth.lane, "command"});
      return;
  }
}

void Simulation::sense() {
  const PoseCovariance& r = ekf_.measurement_noise;
  for (auto& v : vehicles_) {
    if (!config_.sensing.estimated) {
      v.estimate.mean << v.truth.x, v.truth.y, v.truth.theta, v.truth.v, v.truth.psi;
      continue;
    }
    const PoseMeasurement m = emulate_measurement(v.truth, v.id, time(), config_.sensing.noise, v.rng);
    if (tick_ > 0) v.estimate = ekf_predict(v.estimate, config_.dt, ekf_);
    v.estimate = ekf_update(v.estimate, m, r);
  }
}

Snapshot Simulation::snapshot() const {
  Snapshot snap;
  snap.tick = tick_;
  snap.t = time();
  snap.virtuals = virtuals_;
  for (const auto& v : vehicles_) {
    AgentSnapshot a;
    a.id = v.id;
    a.lane = v.truth.lane;
    a.pose = {v.estimate.mean(0), v.estimate.mean(1), wrap_angle(v.estimate.mean(2))};
    a.v = std::max(0.0, v.estimate.mean(3));
    a.s = track_.lane(a.lane).project(a.pose.x, a.pose.y, kUnbounded).s_d;
    a.lane_change = v.truth.lane_change;
    a.v_set = v.v_set;
    a.stopped = v.stopped;
    a.gamified = v.gamified;
    a.mode = v.mode;
    a.cooldown_until = v.cooldown_until;
    a.intent = v.intent;
    a.semi_speed = v.semi_speed;
    a.lane_change_request = v.lane_change_request;

    TrafficAgent t;
    t.id = a.id;
    t.speed = a.v;
    t.home = {a.lane, a.s};
    t.occupancy.push_back(t.home);
    if (a.lane_change) {
      const int to = a.lane_change->to_lane;
      t.occupancy.push_back({to, track_.map_corresponding(a.s, a.lane, to)});
    }
    snap.agents.push_back(a);
    snap.traffic.push_back(std::move(t));
  }
  return snap;
}

LaneChangeModel Simulation::lane_change_model(double v0) const {
  LaneChangeModel m;
  m.idm = config_.idm;
  m.idm.v0 = v0;
  m.mobil = config_.mobil;
  m.escape_length = config_.vehicle.wheelbase;
  m.max_decel = config_.vehicle.max_decel;
  return m;
}

namespace {

std::optional<FollowerNeighbor> follower_on(const std::vector<TrafficAgent>& traffic, int lane,
                                            double s, int ego, const Track& track, double body) {
  const auto rear = nearest_behind(traffic, lane, s, {ego}, track, body);
  if (!rear) return std::nullopt;
  FollowerNeighbor f;
  f.gap_to_ego = rear->gap;
  f.speed = rear->speed;
  const double rear_s = s - (rear->gap + body);
  if (auto lead = nearest_ahead(traffic, lane, rear_s, {ego, rear->id}, track, body)) {
    f.front_without_ego = Neighbor{lead->gap, lead->speed};
  }
  return f;
}

std::optional<Neighbor> leader_on(const std::vector<TrafficAgent>& traffic, int lane, double s,
                                  int ego, const Track& track, double body) {
  if (auto f = nearest_ahead(traffic, lane, s, {ego}, track, body)) {
    return Neighbor{f->gap, f->speed};
  }
  return std::nullopt;
}

const char* denial_reason(const CandidateEvaluation& ev) {
  if (!ev.safe) return "new follower would brake harder than the safe limit";
  if (!ev.escape_guard) return "gap to the new leader is below the effective jam distance";
  if (!ev.cooperative_guard) return "cooperative gap guard failed";
  return "";
}

}  // namespace

PlanOutput Simulation::plan(const Snapshot& snap, int id) const {
  const AgentSnapshot& e = snap.agents[static_cast<std::size_t>(id)];
  const auto& limits = config_.vehicle;
  const double body = limits.body_length;
  const bool cooperative = config_.fleet.policy == Policy::kCooperative;
  PlanOutput out;

  if (e.mode == ControlMode::kManual) {
    out.desired_speed = e.v_set;
    return out;
  }
  if (e.stopped) {
    out.accel = -limits.max_decel;
    out.desired_speed = 0.0;
    return out;
  }

  IdmParams p = config_.idm;
  if (e.mode == ControlMode::kSemiAutomatic && e.semi_speed) p.v0 = std::max(*e.semi_speed, 1e-3);
  const double base_v0 = p.v0;
  const double v = e.v_set;
  const int home = e.lane;
  const bool changing = e.lane_change.has_value();

  // Lanes the ego physically occupies, with its position on each.
  std::vector<LaneOccupancy> occupied{{home, e.s}};
  if (changing) {
    const int to = e.lane_change->to_lane;
    occupied.push_back({to, track_.map_corresponding(e.s, home, to)});
  }

  const auto home_front = nearest_ahead(snap.traffic, home, e.s, {id}, track_, body);

  // Boosted desired speed when a shared intent sits just behind the ego.
  std::vector<LaneView> views;
  if (cooperative) {
    const TrafficAgent& me = snap.traffic[static_cast<std::size_t>(id)];
    const NeighborView nv = build_neighbor_view(me, v, snap.traffic, snap.virtuals, occupied,
                                                track_, config_.coop.c, body);
    views = nv.lanes;
    for (const auto& lv : views) {
      if (lv.virtual_rear && lv.trail_gap) {
        p.v0 = std::max(p.v0, boosted_desired_speed(base_v0, lv.virtual_rear->weight, *lv.trail_gap,
                                                    config_.coop.c, limits.max_speed));
      }
    }
  }

  // Real leaders.
  double a = idm_acceleration(v, std::nullopt, p, p.s0, limits.max_decel);
  auto follow = [&](const FrontTarget& ft, double s0_eff) {
    a = std::min(a, idm_acceleration(v, ft, p, s0_eff, limits.max_decel));
  };
  if (!changing) {
    if (home_front) {
      follow({home_front->gap, v - home_front->speed, home_front->speed, 1.0, false},
             effective_jam_distance(p, home_front->speed, limits.wheelbase));
    }
  } else {
    const LaneOccupancy& target = occupied[1];
    if (auto f = nearest_ahead(snap.traffic, target.lane, target.s, {id}, track_, body)) {
      follow({f->gap, v - f->speed, f->speed, 1.0, false},
             effective_jam_distance(p, f->speed, limits.wheelbase));
    }
    if (home_front) {
      std::optional<double> gap = home_front->gap;
      if (home_front->gap < kBandRange) {
        gap = band_gap(e.pose, snap.agents[static_cast<std::size_t>(home_front->id)].pose, limits,
                       config_.lane_change.clear_margin);
      }
      if (gap && home_front->gap < kBandRange) {
        // Steering clear of the leader rather than following it: keep the
        // jam distance and the closing-rate term but no time headway.
        IdmParams clear = p;
        clear.T = 0.0;
        a = std::min(a, idm_acceleration(v, FrontTarget{*gap, v - home_front->speed, home_front->speed, 1.0, false},
                                         clear, config_.lane_change.band_jam_distance, limits.max_decel));
      } else if (gap) {
        follow({*gap, v - home_front->speed, home_front->speed, 1.0, false}, p.s0);
      }
    }
  }

  // Shared intents ahead of the ego cap its acceleration.
  for (const auto& lv : views) {
    if (lv.virtual_front) {
      const auto& vf = *lv.virtual_front;
      const double a_virtual = idm_acceleration(
          v, vf, p, effective_jam_distance(p, vf.front_speed, limits.wheelbase), limits.max_decel);
      // Yielding is a courtesy: a car that could only make room by braking
      // harder than b_safe lets the merger fall in behind it instead.
      if (a_virtual >= -config_.mobil.b_safe) a = std::min(a, vf.weight * a_virtual);
    }
  }
  out.accel = a;
  out.desired_speed = p.v0;

  // Lateral decisions.
  out.intent = e.intent;
  // Hypothetical accelerations of the neighbours use the fleet's desired
  // speed. A human's semi-automatic setpoint applies to the ego alone and
  // must not make every follower look like it is over its own limit.
  const LaneChangeModel model = lane_change_model(config_.idm.v0);
  auto context_for = [&](std::vector<int> lanes) {
    LaneChangeContext ctx;
    ctx.ego_speed = v;
    ctx.current_front = leader_on(snap.traffic, home, e.s, id, track_, body);
    ctx.old_rear = follower_on(snap.traffic, home, e.s, id, track_, body);
    for (int lane : lanes) {
      CandidateLane cand;
      cand.lane = lane;
      const double s_c = track_.map_corresponding(e.s, home, lane);
      cand.new_front = leader_on(snap.traffic, lane, s_c, id, track_, body);
      cand.new_rear = follower_on(snap.traffic, lane, s_c, id, track_, body);
      ctx.candidates.push_back(cand);
    }
    return ctx;
  };
  const int lane_count = static_cast<int>(track_.lane_count());
  auto valid_lane = [&](int l) { return l >= 0 && l < lane_count; };

  if (!changing && e.mode == ControlMode::kSemiAutomatic && e.lane_change_request != 0) {
    const int target = home + e.lane_change_request;
    std::string reason;
    if (!valid_lane(target)) {
      reason = "no lane on that side";
    } else if (snap.t < e.cooldown_until) {
      reason = "lane change cooldown active";
    } else {
      const auto ctx = context_for({target});
      const CandidateEvaluation ev = evaluate_candidate(ctx, ctx.candidates[0], model);
      if (ev.admissible()) {
        out.start_change = target;
      } else {
        reason = denial_reason(ev);
      }
    }
    if (!out.start_change) {
      out.events.push_back({snap.tick, snap.t, "lane_change_denied", id, -1, target, reason});
    }
  } else if (!changing && e.mode == ControlMode::kAutomatic && snap.t >= e.cooldown_until) {
    std::vector<int> lanes;
    for (int l : {home - 1, home + 1}) {
      if (valid_lane(l)) lanes.push_back(l);
    }
    const auto ctx = context_for(lanes);
    const LaneChangeDecision d = evaluate_lane_change(ctx, model);
    if (d.outcome == LaneChangeDecision::Outcome::kChange) {
      out.start_change = d.target_lane;
    } else if (cooperative && e.intent) {
      const auto it = std::find_if(ctx.candidates.begin(), ctx.candidates.end(),
                                   [&](const CandidateLane& c) { return c.lane == e.intent->target_lane; });
      if (it != ctx.candidates.end() && evaluate_candidate(ctx, *it, model).admissible()) {
        out.start_change = e.intent->target_lane;
      } else if (snap.t - e.intent->since >
                 config_.lane_change.abandon_factor * config_.mobil.gamma) {
        out.events.push_back(
            {snap.tick, snap.t, "intent_expired", id, -1, e.intent->target_lane, ""});
        out.intent.reset();
      }
    } else if (cooperative && d.outcome == LaneChangeDecision::Outcome::kDesire) {
      out.intent = PendingIntent{d.target_lane, snap.t};
      out.events.push_back({snap.tick, snap.t, "intent_created", id, -1, d.target_lane, ""});
    }
  }

  if (out.start_change) {
    if (cooperative && (!out.intent || out.intent->target_lane != *out.start_change)) {
      out.intent = PendingIntent{*out.start_change, snap.t};
    }
    if (!cooperative) out.intent.reset();
  }

  if (cooperative && out.intent) {
    const std::optional<double> gap_to_front =
        home_front ? std::optional<double>(home_front->gap) : std::nullopt;
    out.virtual_vehicle = project_intent(id, home, e.s, v, out.intent->target_lane, gap_to_front,
                                         config_.coop, track_, snap.tick);
  }
  return out;
}

std::optional<int> Simulation::start_lane_change(Vehicle& v, int target, const AgentSnapshot& a) {
  v.path = lane_change_path(track_, a.lane, target, a.s, a.v_set, config_.mobil.gamma,
                            config_.lane_change.min_distance);
  v.truth.lane_change = LaneChangeState{a.lane, target, 0.0, v.path->start_s(), v.path->distance()};
  v.lane_change_started = time();
  emit({tick_, time(), "lane_change_start", v.id, -1, target, ""});
  return target;
}

void Simulation::commit_plans(const Snapshot& snap, std::vector<PlanOutput>& plans) {
  virtuals_.clear();
  for (auto& v : vehicles_) {
    PlanOutput& p = plans[static_cast<std::size_t>(v.id)];
    v.planned_accel = p.accel;
    v.lane_change_request = 0;
    for (auto& e : p.events) emit(std::move(e));
    v.intent = p.intent;
    if (p.start_change) start_lane_change(v, *p.start_change, snap.agents[static_cast<std::size_t>(v.id)]);
    if (p.virtual_vehicle && v.intent) virtuals_.push_back(*p.virtual_vehicle);
  }
}

void Simulation::control_and_integrate() {
  const auto& limits = config_.vehicle;
  const double dt = config_.dt;
  std::vector<Actuation> commands(vehicles_.size());

  for (auto& v : vehicles_) {
    Actuation& cmd = commands[static_cast<std::size_t>(v.id)];
    if (v.mode == ControlMode::kManual) {
      cmd.psi = v.manual_steer * limits.max_steer;
      cmd.v = 0.5 * (v.manual_throttle + 1.0) * config_.game.manual_max_speed;
      v.v_set = v.truth.v;
      continue;
    }
    const Pose2 pose{v.estimate.mean(0), v.estimate.mean(1), v.estimate.mean(2)};
    const ReferenceProjection proj = v.path ? v.path->project(pose.x, pose.y)
                                            : track_.lane(v.truth.lane).project(pose.x, pose.y);
    cmd.psi = lateral_control(pose, proj, config_.tracker);

    double a = v.planned_accel;
    double v_set = std::clamp(v.v_set + a * dt, 0.0, limits.max_speed);
    if (v.stopped) {
      v_set = 0.0;
      a = -limits.max_decel;
    }
    v.v_set = v_set;
    const double feedback = velocity_pid(v.estimate.mean(3), v_set, v.pid, dt, config_.pid, limits);
    v.accel_cmd = std::clamp(a + feedback, -limits.max_decel, limits.max_accel);
    cmd.v = v.truth.v + v.accel_cmd * dt;
  }

  for (auto& v : vehicles_) {
    const Actuation& cmd = commands[static_cast<std::size_t>(v.id)];
    const double before = v.truth.v;
    v.truth = step_kinematics(v.truth, cmd.v, cmd.psi, dt, limits);
    if (v.mode == ControlMode::kManual) v.accel_cmd = (v.truth.v - before) / dt;
  }
}

void Simulation::update_track_coordinates(Vehicle& v) {
  if (v.mode == ControlMode::kManual) {
    double best = kUnbounded;
    for (const auto& lane : track_.lanes()) {
      const ReferenceProjection p = lane.project(v.truth.x, v.truth.y, kUnbounded);
      if (std::abs(p.lateral_error) < best) {
        best = std::abs(p.lateral_error);
        v.truth.lane = lane.id();
        v.truth.s = p.s_d;
        v.truth.lateral = p.lateral_error;
      }
    }
    return;
  }

  const Lane& lane = track_.lane(v.truth.lane);
  const ReferenceProjection p = lane.project(v.truth.x, v.truth.y, kUnbounded);
  v.truth.s = p.s_d;
  v.truth.lateral = p.lateral_error;
  if (!v.path) return;

  const double u = v.path->progress_at(p.s_d);
  v.truth.lane_change->progress = u;
  v.truth.lateral = p.lateral_error - v.path->offset_at_progress(u);
  if (u < 1.0) return;

  const int to = v.path->to_lane();
  v.truth.lane = to;
  v.path.reset();
  v.truth.lane_change.reset();
  v.intent.reset();
  v.cooldown_until = time() + config_.mobil.gamma;
  std::erase_if(virtuals_, [&](const VirtualVehicle& vv) { return vv.owner == v.id; });
  const ReferenceProjection q = track_.lane(to).project(v.truth.x, v.truth.y, kUnbounded);
  v.truth.s = q.s_d;
  v.truth.lateral = q.lateral_error;
  emit({tick_, time(), "lane_change_complete", v.id, -1, to, ""});
}

void Simulation::check_collisions() {
  std::vector<Footprint> bodies;
  bodies.reserve(vehicles_.size());
  for (const auto& v : vehicles_) {
    bodies.push_back(footprint(v.truth.x, v.truth.y, v.truth.theta, config_.vehicle));
  }
  std::vector<std::pair<int, int>> now;
  bool fresh = false;
  for (const auto& hit : detect_collisions(bodies)) {
    now.emplace_back(hit.a, hit.b);
    if (std::find(contacts_.begin(), contacts_.end(), now.back()) == contacts_.end()) {
      emit({tick_, time(), "collision", hit.a, hit.b, vehicles_[static_cast<std::size_t>(hit.a)].truth.lane, ""});
      fresh = true;
    }
  }
  contacts_ = std::move(now);
  if (fresh && config_.halt_on_collision) {
    halted_ = true;
    emit({tick_, time(), "halt", -1, -1, -1, "collision with halt_on_collision set"});
  }
}

void Simulation::record_state() {
  if (!recording_) return;
  for (const auto& v : vehicles_) {
    RecordRow r;
    r.tick = tick_;
    r.t = time();
    r.id = v.id;
    r.lane = v.truth.lane;
    r.s = v.truth.s;
    r.x = v.truth.x;
    r.y = v.truth.y;
    r.theta = v.truth.theta;
    r.v = v.truth.v;
    r.psi = v.truth.psi;
    r.lc_progress = v.truth.lane_change ? v.truth.lane_change->progress : 0.0;
    r.accel_cmd = v.accel_cmd;
    r.stopped = v.stopped;
    rows_.push_back(r);
  }
}

void Simulation::step() {
  if (finished()) return;
  apply_scripted_events();
  apply_commands();

  sense();

  if (tick_ % config_.planner_divider == 0) {
    const Snapshot snap = snapshot();
    if (snapshot_observer_) snapshot_observer_(snap);
    std::vector<PlanOutput> plans;
    plans.reserve(vehicles_.size());
    for (const auto& v : vehicles_) plans.push_back(plan(snap, v.id));
    commit_plans(snap, plans);
  }

  control_and_integrate();
  ++tick_;
  for (auto& v : vehicles_) update_track_coordinates(v);
  check_collisions();
  record_state();
}

void Simulation::run_to_end() {
  while (!finished()) step();
}

RunRecord Simulation::take_record() {
  RunRecord rec;
  rec.config = config_;
  rec.vehicle_count = static_cast<int>(vehicles_.size());
  rec.ticks = tick_;
  rec.halted = halted_;
  rec.rows = std::move(rows_);
  rec.events = events_;
  rows_.clear();
  return rec;
}

RunRecord run_scenario(const ScenarioConfig& config) {
  Simulation sim(config);
  sim.run_to_end();
  return sim.take_record();
}

RunRecord replay_scenario(const ScenarioConfig& config,
                          const std::vector<std::pair<long, Command>>& log,
                          std::size_t* unused_commands) {
  Simulation sim(config);
  std::size_t next = 0;
  while (!sim.finished()) {
    if (next < log.size() && log[next].first < sim.tick()) {
      throw std::invalid_argument("command log is out of order at tick " +
                                  std::to_string(log[next].first));
    }
    while (next < log.size() && log[next].first == sim.tick()) sim.submit(log[next++].second);
    sim.step();
  }
  if (unused_commands) *unused_commands = log.size() - next;
  return sim.take_record();
}

}  // namespace minicar
