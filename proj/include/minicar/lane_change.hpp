#pragma once

#include <optional>
#include <string>
#include <vector>

#include "minicar/idm.hpp"
#include "minicar/track.hpp"

namespace minicar {

struct MobilParams {
  double politeness{0.5};
  double b_safe{0.35};
  double delta_a_threshold{0.4};
  // Lane-change duration and cooperative safety time constant (s).
  double gamma{2.0};
  bool cooperative{false};

  void validate() const;
};

/// Table 3 MOBIL values; b_safe is 0.7 alpha of the matching IDM preset.
MobilParams mobil_preset(const std::string& name);

/// A vehicle at bumper-to-bumper distance `gap` driving at `speed`.
struct Neighbor {
  double gap{0.0};
  double speed{0.0};
};

/// A follower of the ego (old or new). `front_without_ego` is the leader it
/// follows when the ego is not in front of it.
struct FollowerNeighbor {
  double gap_to_ego{0.0};
  double speed{0.0};
  std::optional<Neighbor> front_without_ego{};
};

struct CandidateLane {
  int lane{0};
  std::optional<Neighbor> new_front{};
  std::optional<FollowerNeighbor> new_rear{};
};

/// Snapshot of the local traffic around the ego for one decision.
struct LaneChangeContext {
  double ego_speed{0.0};
  std::optional<Neighbor> current_front{};
  std::optional<FollowerNeighbor> old_rear{};
  std::vector<CandidateLane> candidates{};  // evaluated in order; inner lanes first
};

/// Inputs shared by all hypothetical IDM evaluations.
struct LaneChangeModel {
  IdmParams idm{};
  MobilParams mobil{};
  double escape_length{0.122};
  double max_decel{2.0};

  /// beta_n: alpha in cooperative mode, b_safe otherwise.
  double safe_braking() const { return mobil.cooperative ? idm.alpha : mobil.b_safe; }

  /// Plain IDM acceleration of a vehicle at `speed` behind `front`.
  double accel_behind(double speed, const std::optional<Neighbor>& front) const;
};

bool safety_criterion(const std::optional<double>& new_rear_accel_after, double b_safe);

bool incentive_criterion(double da_c, double da_n, double da_o, double politeness,
                         double threshold);

/// s > s0 + gamma * max(closing_rate, 0).
bool cooperative_gap_guard(double gap, double s0, double gamma, double closing_rate);

struct CandidateEvaluation {
  int lane{0};
  double a_c_before{0.0}, a_c_after{0.0};
  double a_n_before{0.0}, a_n_after{0.0};
  double a_o_before{0.0}, a_o_after{0.0};
  bool safe{true};
  bool incentive{false};
  // Cooperative only: the incentive without the new follower's term. An
  // announced intent asks that follower to make room, so its loss is what
  // the cooperation negotiates rather than a reason not to ask.
  bool request_incentive{false};
  bool escape_guard{true};
  bool cooperative_guard{true};

  /// Every check except the incentive.
  bool admissible() const { return safe && escape_guard && cooperative_guard; }
  bool passes() const { return admissible() && incentive; }
};

CandidateEvaluation evaluate_candidate(const LaneChangeContext& ctx, const CandidateLane& cand,
                                       const LaneChangeModel& model);

struct LaneChangeDecision {
  enum class Outcome {
    kStay,
    kChange,
    // Incentive met but safety or a guard failed: the ego wants this lane.
    // Cooperative drivers also desire a lane when only the request
    // incentive holds.
    kDesire,
  };
  Outcome outcome{Outcome::kStay};
  int target_lane{-1};
  std::vector<CandidateEvaluation> evaluations{};
};

/// First passing candidate wins; otherwise the first candidate whose
/// incentive alone passed is reported as a desire.
LaneChangeDecision evaluate_lane_change(const LaneChangeContext& ctx, const LaneChangeModel& model);

/// Lateral blend from one lane centerline to an adjacent one, following the
/// smoothstep 3u^2 - 2u^3 over `distance` metres of the source lane.
class LaneChangePath {
 public:
  LaneChangePath(const Track& track, int from_lane, int to_lane, double start_s, double distance);

  int from_lane() const { return from_->id(); }
  int to_lane() const { return to_lane_; }
  double start_s() const { return start_s_; }
  double distance() const { return distance_; }

  /// Progress u in [0, 1] at source-lane arc length s.
  double progress_at(double s) const;
  /// Signed lateral offset from the source centerline (left positive).
  double offset_at_progress(double u) const;

  LanePose pose_at(double s) const;

  /// Closest point on the blended path.
  ReferenceProjection project(double x, double y, double max_offset = 1.0) const;

 private:
  struct Offset {
    double o, d1, d2;
  };
  Offset offset(double s) const;

  const Lane* from_;
  int to_lane_;
  double start_s_;
  double distance_;
  double full_offset_;
};

/// Builds the blend for a change starting at start_s with the given speed.
/// The blend length is max(v * gamma, min_distance). Throws TrackError for
/// lanes that are not adjacent.
LaneChangePath lane_change_path(const Track& track, int from_lane, int to_lane, double start_s,
                                double v_at_start, double gamma, double min_distance);

double smoothstep(double u);

}  // namespace minicar
