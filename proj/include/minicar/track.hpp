#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace minicar {

struct Pose2 {
  double x{0.0};
  double y{0.0};
  double theta{0.0};
};

/// Pose and curvature of a centerline point.
struct LanePose {
  double x{0.0};
  double y{0.0};
  double theta{0.0};
  double kappa{0.0};
};

/// Closest point on a reference curve to a query point.
///
/// lateral_error is positive when the query point lies to the left of the
/// tangent direction.
struct ReferenceProjection {
  double s_d{0.0};
  double x_d{0.0};
  double y_d{0.0};
  double theta_d{0.0};
  double kappa{0.0};
  double lateral_error{0.0};
};

/// A straight (radius == 0) or circular arc primitive.
struct Segment {
  enum class Kind { kStraight, kArc };

  Kind kind{Kind::kStraight};
  double length{0.0};
  double radius{0.0};
  // Signed sweep angle of an arc, positive for a left (counter-clockwise) turn.
  double angle{0.0};

  static Segment straight(double length);
  static Segment arc(double radius, double angle);

  double curvature() const;
};

class TrackError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a query point is farther from a lane than the allowed offset.
class LostVehicleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Closed lane centerline parameterized by arc length.
class Lane {
 public:
  Lane(int id, Pose2 start, std::vector<Segment> segments, double width);

  int id() const { return id_; }
  double length() const { return length_; }
  double width() const { return width_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const Pose2& start() const { return start_; }

  /// Wraps s into [0, length).
  double wrap(double s) const;

  /// Pose at arc length s (taken modulo the lane length).
  LanePose pose_at(double s) const;

  /// Globally closest centerline point. Ties resolve to the smallest s_d.
  /// Throws LostVehicleError if the point is farther than max_offset.
  ReferenceProjection project(double x, double y, double max_offset = 1.0) const;

  /// Index of the segment containing wrapped arc length s and the arc length
  /// at which that segment begins.
  std::size_t segment_index(double s) const;
  double segment_start_s(std::size_t i) const { return seg_start_s_[i]; }
  const Pose2& segment_start_pose(std::size_t i) const { return seg_start_pose_[i]; }

 private:
  int id_;
  Pose2 start_;
  std::vector<Segment> segments_;
  double width_;
  double length_{0.0};
  std::vector<double> seg_start_s_;
  std::vector<Pose2> seg_start_pose_;
};

/// Geometry request for a stadium-shaped multi-lane loop.
///
/// Lane 0 is innermost; each further lane is offset to the right (outwards)
/// by lane_spacing. When lane_spacing is not positive it is derived from the
/// first two target lengths.
struct TrackSpec {
  std::vector<double> lane_lengths{16.0, 17.0};
  double lane_spacing{0.0};
  double end_radius{1.0};
  double lane_width{0.15};
  std::vector<double> checkpoint_s{};
};

class Track {
 public:
  Track(std::vector<Lane> lanes, double lane_spacing, std::vector<double> checkpoint_s);

  std::size_t lane_count() const { return lanes_.size(); }
  const Lane& lane(int id) const;
  const std::vector<Lane>& lanes() const { return lanes_; }
  double lane_spacing() const { return lane_spacing_; }
  double checkpoint(int lane_id) const { return checkpoint_s_.at(static_cast<std::size_t>(lane_id)); }

  /// Maps s on one lane to the same fraction of another lane's length.
  double map_proportional(double s, int from_lane, int to_lane) const;

  /// Maps s to the laterally corresponding point on another lane (same
  /// segment, same fraction within the segment).
  double map_corresponding(double s, int from_lane, int to_lane) const;

 private:
  std::vector<Lane> lanes_;
  double lane_spacing_;
  std::vector<double> checkpoint_s_;
};

/// Builds the stadium loop. Throws TrackError on infeasible geometry or when
/// the resulting lane lengths miss the targets by more than 1e-6 m.
Track build_track(const TrackSpec& spec);

/// Forward bumper-to-bumper distance from a rear vehicle to a front vehicle.
/// Negative only when the bodies overlap along the lane.
double gap_along_lane(double s_rear, double s_front, double lane_length, double body_length);

struct TrackSample {
  int lane{0};
  double s{0.0};
  LanePose pose{};
};

std::vector<TrackSample> sample_track(const Track& track, double resolution);

/// CSV with header lane_id,s,x,y,theta,kappa.
std::string track_samples_csv(const std::vector<TrackSample>& samples);

double wrap_angle(double a);

}  // namespace minicar
