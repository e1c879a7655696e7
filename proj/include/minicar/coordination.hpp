#pragma once

#include <optional>
#include <vector>

#include "minicar/idm.hpp"
#include "minicar/track.hpp"

namespace minicar {

struct CoopParams {
  double c{2.0};
  double kappa_u{0.5};

  void validate() const;
};

/// A projected post-lane-change state shared with nearby vehicles.
struct VirtualVehicle {
  int owner{-1};
  int lane{0};
  double s{0.0};
  double v{0.0};
  double weight{0.0};
  long created_tick{0};
};

/// clamp(kappa_u * (c - gap), 0, 1).
double urgency_weight(double gap_to_front, double c, double kappa_u);

/// Places the owner's intended state on target_lane at the same fraction of
/// the lap. Without a real leader the urgency is zero.
VirtualVehicle project_intent(int owner, int lane, double s, double v, int target_lane,
                              const std::optional<double>& gap_to_front, const CoopParams& coop,
                              const Track& track, long tick);

struct LaneOccupancy {
  int lane{0};
  double s{0.0};
};

/// One vehicle as seen by the planners during a tick. A vehicle changing
/// lanes occupies both its source and target lane.
struct TrafficAgent {
  int id{-1};
  double speed{0.0};
  LaneOccupancy home{};
  std::vector<LaneOccupancy> occupancy{};
};

/// Centre distance used for communication range. Same-lane pairs use arc
/// distance; cross-lane pairs compare lap fractions scaled by the mean of
/// both lane lengths, which keeps the relation symmetric.
double range_distance(const LaneOccupancy& a, const LaneOccupancy& b, const Track& track);

std::vector<int> neighbors_within_range(const TrafficAgent& ego,
                                        const std::vector<TrafficAgent>& fleet, const Track& track,
                                        double c);

struct LaneView {
  int lane{0};
  double ego_s{0.0};
  std::optional<FrontTarget> front{};
  int front_id{-1};
  // Rear vehicle: gap is rear bumper-to-bumper distance, approach_rate is
  // rear speed minus ego speed and front_speed holds the rear's speed.
  std::optional<FrontTarget> rear{};
  int rear_id{-1};
  std::optional<FrontTarget> virtual_front{};
  std::optional<FrontTarget> virtual_rear{};
  std::optional<double> trail_gap{};
};

struct NeighborView {
  std::vector<LaneView> lanes{};

  const LaneView* lane(int id) const;
};

/// Nearest real and virtual neighbours on each lane of interest. Virtual
/// vehicles count only when their owner is within range c of the ego; the
/// ego's own virtual vehicles are never included.
NeighborView build_neighbor_view(const TrafficAgent& ego, double ego_speed,
                                 const std::vector<TrafficAgent>& fleet,
                                 const std::vector<VirtualVehicle>& virtuals,
                                 const std::vector<LaneOccupancy>& lanes_of_interest,
                                 const Track& track, double c, double body_length);

/// Nearest agent ahead of `s` on `lane`, skipping the listed ids.
struct AgentHit {
  int id{-1};
  double gap{0.0};
  double speed{0.0};
};
std::optional<AgentHit> nearest_ahead(const std::vector<TrafficAgent>& fleet, int lane, double s,
                                      std::initializer_list<int> skip, const Track& track,
                                      double body_length);
std::optional<AgentHit> nearest_behind(const std::vector<TrafficAgent>& fleet, int lane, double s,
                                       std::initializer_list<int> skip, const Track& track,
                                       double body_length);

}  // namespace minicar
