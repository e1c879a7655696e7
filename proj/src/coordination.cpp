#include "minicar/coordination.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace minicar {

namespace {

bool skipped(int id, std::initializer_list<int> skip) {
  return std::find(skip.begin(), skip.end(), id) != skip.end();
}

double forward_distance(double from, double to, double length) {
  double d = std::fmod(to - from, length);
  if (d < 0.0) d += length;
  if (d >= length) d -= length;
  return d;
}

}  // namespace

void CoopParams::validate() const {
  if (!(c > 0.0)) throw std::invalid_argument("coop.c must be positive");
  if (!(kappa_u > 0.0)) throw std::invalid_argument("coop.kappa_u must be positive");
}

double urgency_weight(double gap_to_front, double c, double kappa_u) {
  return std::clamp(kappa_u * (c - gap_to_front), 0.0, 1.0);
}

VirtualVehicle project_intent(int owner, int lane, double s, double v, int target_lane,
                              const std::optional<double>& gap_to_front, const CoopParams& coop,
                              const Track& track, long tick) {
  VirtualVehicle vv;
  vv.owner = owner;
  vv.lane = target_lane;
  vv.s = track.map_proportional(s, lane, target_lane);
  vv.v = v;
  vv.weight = gap_to_front ? urgency_weight(*gap_to_front, coop.c, coop.kappa_u) : 0.0;
  vv.created_tick = tick;
  return vv;
}

double range_distance(const LaneOccupancy& a, const LaneOccupancy& b, const Track& track) {
  if (a.lane == b.lane) {
    const double len = track.lane(a.lane).length();
    const double d = forward_distance(a.s, b.s, len);
    return std::min(d, len - d);
  }
  const double la = track.lane(a.lane).length();
  const double lb = track.lane(b.lane).length();
  const double df = forward_distance(a.s / la, b.s / lb, 1.0);
  return std::min(df, 1.0 - df) * 0.5 * (la + lb);
}

std::vector<int> neighbors_within_range(const TrafficAgent& ego,
                                        const std::vector<TrafficAgent>& fleet, const Track& track,
                                        double c) {
  std::vector<int> ids;
  for (const auto& other : fleet) {
    if (other.id == ego.id) continue;
    if (range_distance(ego.home, other.home, track) <= c) ids.push_back(other.id);
  }
  return ids;
}

const LaneView* NeighborView::lane(int id) const {
  for (const auto& lv : lanes) {
    if (lv.lane == id) return &lv;
  }
  return nullptr;
}

std::optional<AgentHit> nearest_ahead(const std::vector<TrafficAgent>& fleet, int lane, double s,
                                      std::initializer_list<int> skip, const Track& track,
                                      double body_length) {
  const double len = track.lane(lane).length();
  std::optional<AgentHit> best;
  double best_d = 0.0;
  for (const auto& a : fleet) {
    if (skipped(a.id, skip)) continue;
    for (const auto& occ : a.occupancy) {
      if (occ.lane != lane) continue;
      const double d = forward_distance(s, occ.s, len);
      if (!best || d < best_d) {
        best_d = d;
        best = AgentHit{a.id, d - body_length, a.speed};
      }
    }
  }
  return best;
}

std::optional<AgentHit> nearest_behind(const std::vector<TrafficAgent>& fleet, int lane, double s,
                                       std::initializer_list<int> skip, const Track& track,
                                       double body_length) {
  const double len = track.lane(lane).length();
  std::optional<AgentHit> best;
  double best_d = 0.0;
  for (const auto& a : fleet) {
    if (skipped(a.id, skip)) continue;
    for (const auto& occ : a.occupancy) {
      if (occ.lane != lane) continue;
      const double d = forward_distance(occ.s, s, len);
      if (!best || d < best_d) {
        best_d = d;
        best = AgentHit{a.id, d - body_length, a.speed};
      }
    }
  }
  return best;
}

NeighborView build_neighbor_view(const TrafficAgent& ego, double ego_speed,
                                 const std::vector<TrafficAgent>& fleet,
                                 const std::vector<VirtualVehicle>& virtuals,
                                 const std::vector<LaneOccupancy>& lanes_of_interest,
                                 const Track& track, double c, double body_length) {
  NeighborView view;
  for (const auto& loi : lanes_of_interest) {
    LaneView lv;
    lv.lane = loi.lane;
    lv.ego_s = loi.s;
    if (auto f = nearest_ahead(fleet, loi.lane, loi.s, {ego.id}, track, body_length)) {
      lv.front = FrontTarget{f->gap, ego_speed - f->speed, f->speed, 1.0, false};
      lv.front_id = f->id;
    }
    if (auto r = nearest_behind(fleet, loi.lane, loi.s, {ego.id}, track, body_length)) {
      lv.rear = FrontTarget{r->gap, r->speed - ego_speed, r->speed, 1.0, false};
      lv.rear_id = r->id;
    }

    const double len = track.lane(loi.lane).length();
    double best_front = 0.0, best_rear = 0.0;
    for (const auto& vv : virtuals) {
      if (vv.owner == ego.id || vv.lane != loi.lane) continue;
      const TrafficAgent* owner = nullptr;
      for (const auto& a : fleet) {
        if (a.id == vv.owner) owner = &a;
      }
      if (owner == nullptr || range_distance(ego.home, owner->home, track) > c) continue;
      // Each virtual vehicle is either ahead of or behind the ego, whichever
      // way round the loop is shorter.
      const double ahead = forward_distance(loi.s, vv.s, len);
      const double behind = len - ahead;
      if (ahead <= behind) {
        if (!lv.virtual_front || ahead < best_front) {
          best_front = ahead;
          lv.virtual_front =
              FrontTarget{ahead - body_length, ego_speed - vv.v, vv.v, vv.weight, true};
        }
      } else if (!lv.virtual_rear || behind < best_rear) {
        best_rear = behind;
        lv.virtual_rear = FrontTarget{behind - body_length, vv.v - ego_speed, vv.v, vv.weight, true};
        lv.trail_gap = std::max(behind - body_length, 0.0);
      }
    }
    view.lanes.push_back(lv);
  }
  return view;
}

}  // namespace minicar
