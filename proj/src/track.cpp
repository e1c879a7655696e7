#include "minicar/track.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace minicar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kTieTolerance = 1e-12;

double wrap_positive(double a, double period) {
  double r = std::fmod(a, period);
  if (r < 0.0) r += period;
  if (r >= period) r -= period;
  return r;
}

LanePose segment_pose(const Segment& seg, const Pose2& p0, double u) {
  if (seg.kind == Segment::Kind::kStraight) {
    return {p0.x + u * std::cos(p0.theta), p0.y + u * std::sin(p0.theta), p0.theta, 0.0};
  }
  const double k = seg.curvature();
  const double th = p0.theta + k * u;
  return {p0.x + (std::sin(th) - std::sin(p0.theta)) / k,
          p0.y + (-std::cos(th) + std::cos(p0.theta)) / k, th, k};
}

// Arc length within the segment of the point closest to (qx, qy), before
// comparison against the segment endpoints.
double segment_closest_u(const Segment& seg, const Pose2& p0, double qx, double qy) {
  if (seg.kind == Segment::Kind::kStraight) {
    const double u = (qx - p0.x) * std::cos(p0.theta) + (qy - p0.y) * std::sin(p0.theta);
    return std::clamp(u, 0.0, seg.length);
  }
  const double k = seg.curvature();
  const double cx = p0.x - std::sin(p0.theta) / k;
  const double cy = p0.y + std::cos(p0.theta) / k;
  const double dx = qx - cx;
  const double dy = qy - cy;
  if (std::hypot(dx, dy) < 1e-15) return 0.0;
  const double phi = std::atan2(dy, dx);
  double sweep = 0.0;
  if (k > 0.0) {
    sweep = wrap_positive(phi + std::numbers::pi / 2.0 - p0.theta, kTwoPi);
  } else {
    sweep = wrap_positive(p0.theta - (phi - std::numbers::pi / 2.0), kTwoPi);
  }
  const double u = sweep * seg.radius;
  return u <= seg.length ? u : -1.0;
}

}  // namespace

double wrap_angle(double a) {
  double r = std::fmod(a + std::numbers::pi, kTwoPi);
  if (r <= 0.0) r += kTwoPi;
  return r - std::numbers::pi;
}

Segment Segment::straight(double length) { return {Kind::kStraight, length, 0.0, 0.0}; }

Segment Segment::arc(double radius, double angle) {
  return {Kind::kArc, radius * std::abs(angle), radius, angle};
}

double Segment::curvature() const {
  if (kind == Kind::kStraight) return 0.0;
  return angle > 0.0 ? 1.0 / radius : -1.0 / radius;
}

Lane::Lane(int id, Pose2 start, std::vector<Segment> segments, double width)
    : id_(id), start_(start), segments_(std::move(segments)), width_(width) {
  if (segments_.empty()) throw TrackError("lane " + std::to_string(id) + " has no segments");
  Pose2 p = start_;
  double s = 0.0;
  for (const auto& seg : segments_) {
    if (!(seg.length > 0.0)) throw TrackError("segment length must be positive");
    if (seg.kind == Segment::Kind::kArc && !(seg.radius > 0.0)) {
      throw TrackError("arc radius must be positive");
    }
    seg_start_s_.push_back(s);
    seg_start_pose_.push_back(p);
    const LanePose end = segment_pose(seg, p, seg.length);
    p = {end.x, end.y, end.theta};
    s += seg.length;
  }
  length_ = s;
  const double heading_miss = std::abs(wrap_angle(p.theta - start_.theta));
  if (std::hypot(p.x - start_.x, p.y - start_.y) > 1e-9 || heading_miss > 1e-9) {
    throw TrackError("lane " + std::to_string(id) + " segments do not close the loop");
  }
}

double Lane::wrap(double s) const { return wrap_positive(s, length_); }

std::size_t Lane::segment_index(double s) const {
  const double w = wrap(s);
  std::size_t i = segments_.size() - 1;
  while (i > 0 && seg_start_s_[i] > w) --i;
  return i;
}

LanePose Lane::pose_at(double s) const {
  const double w = wrap(s);
  const std::size_t i = segment_index(w);
  return segment_pose(segments_[i], seg_start_pose_[i], w - seg_start_s_[i]);
}

ReferenceProjection Lane::project(double x, double y, double max_offset) const {
  double best_dist = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  LanePose best_pose{};
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& seg = segments_[i];
    const auto& p0 = seg_start_pose_[i];
    const double candidates[3] = {0.0, segment_closest_u(seg, p0, x, y), seg.length};
    for (double u : candidates) {
      if (u < 0.0) continue;
      const LanePose lp = segment_pose(seg, p0, u);
      const double d = std::hypot(x - lp.x, y - lp.y);
      if (d < best_dist - kTieTolerance) {
        best_dist = d;
        best_s = seg_start_s_[i] + u;
        best_pose = lp;
      }
    }
  }
  if (best_dist > max_offset) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "point (%.3f, %.3f) is %.3f m from lane %d (limit %.3f m)", x,
                  y, best_dist, id_, max_offset);
    throw LostVehicleError(buf);
  }
  ReferenceProjection r;
  r.s_d = wrap(best_s);
  r.x_d = best_pose.x;
  r.y_d = best_pose.y;
  r.theta_d = best_pose.theta;
  r.kappa = best_pose.kappa;
  r.lateral_error = -(x - best_pose.x) * std::sin(best_pose.theta) +
                    (y - best_pose.y) * std::cos(best_pose.theta);
  return r;
}

Track::Track(std::vector<Lane> lanes, double lane_spacing, std::vector<double> checkpoint_s)
    : lanes_(std::move(lanes)), lane_spacing_(lane_spacing), checkpoint_s_(std::move(checkpoint_s)) {
  if (lanes_.size() < 2) throw TrackError("a track needs at least two lanes");
  if (checkpoint_s_.empty()) checkpoint_s_.assign(lanes_.size(), 0.0);
  if (checkpoint_s_.size() != lanes_.size()) {
    throw TrackError("checkpoint_s needs one entry per lane");
  }
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    if (lanes_[i].segments().size() != lanes_[0].segments().size()) {
      throw TrackError("all lanes must share the same segment topology");
    }
    checkpoint_s_[i] = lanes_[i].wrap(checkpoint_s_[i]);
  }
}

const Lane& Track::lane(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= lanes_.size()) {
    throw TrackError("no lane with id " + std::to_string(id));
  }
  return lanes_[static_cast<std::size_t>(id)];
}

double Track::map_proportional(double s, int from_lane, int to_lane) const {
  const Lane& from = lane(from_lane);
  const Lane& to = lane(to_lane);
  return to.wrap(from.wrap(s) / from.length() * to.length());
}

double Track::map_corresponding(double s, int from_lane, int to_lane) const {
  const Lane& from = lane(from_lane);
  const Lane& to = lane(to_lane);
  const double w = from.wrap(s);
  const std::size_t i = from.segment_index(w);
  const double frac = (w - from.segment_start_s(i)) / from.segments()[i].length;
  return to.wrap(to.segment_start_s(i) + frac * to.segments()[i].length);
}

Track build_track(const TrackSpec& spec) {
  const auto n = spec.lane_lengths.size();
  if (n < 2) throw TrackError("track spec needs at least two lanes");
  if (spec.lane_spacing < 0.0) throw TrackError("lane_spacing must be positive");
  if (!(spec.end_radius > 0.0)) throw TrackError("end_radius must be positive");

  double spacing = spec.lane_spacing;
  if (spacing == 0.0) spacing = (spec.lane_lengths[1] - spec.lane_lengths[0]) / kTwoPi;
  if (!(spacing > 0.0)) {
    throw TrackError("lane lengths must increase from inner to outer lane");
  }

  const double r0 = spec.end_radius;
  const double straight = (spec.lane_lengths[0] - kTwoPi * r0) / 2.0;
  if (!(straight > 0.0)) {
    throw TrackError("end_radius too large for the inner lane length");
  }

  std::vector<Lane> lanes;
  lanes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = r0 + static_cast<double>(i) * spacing;
    if (!(r > 0.0)) throw TrackError("offset produces a non-positive radius");
    std::vector<Segment> segs{Segment::straight(straight), Segment::arc(r, std::numbers::pi),
                              Segment::straight(straight), Segment::arc(r, std::numbers::pi)};
    Lane lane(static_cast<int>(i), Pose2{0.0, -r, 0.0}, std::move(segs), spec.lane_width);
    if (std::abs(lane.length() - spec.lane_lengths[i]) > 1e-6) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "lane %zu length %.9f m cannot match target %.9f m with spacing %.9f m", i,
                    lane.length(), spec.lane_lengths[i], spacing);
      throw TrackError(buf);
    }
    lanes.push_back(std::move(lane));
  }
  return Track(std::move(lanes), spacing, spec.checkpoint_s);
}

double gap_along_lane(double s_rear, double s_front, double lane_length, double body_length) {
  return wrap_positive(s_front - s_rear, lane_length) - body_length;
}

std::vector<TrackSample> sample_track(const Track& track, double resolution) {
  if (!(resolution > 0.0)) throw TrackError("sample resolution must be positive");
  std::vector<TrackSample> out;
  for (const auto& lane : track.lanes()) {
    const auto count = static_cast<std::size_t>(std::ceil(lane.length() / resolution));
    for (std::size_t k = 0; k < count; ++k) {
      const double s = static_cast<double>(k) * resolution;
      out.push_back({lane.id(), s, lane.pose_at(s)});
    }
  }
  return out;
}

std::string track_samples_csv(const std::vector<TrackSample>& samples) {
  std::ostringstream os;
  os << "lane_id,s,x,y,theta,kappa\n";
  char buf[192];
  for (const auto& smp : samples) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", smp.lane, smp.s, smp.pose.x,
                  smp.pose.y, smp.pose.theta, smp.pose.kappa);
    os << buf;
  }
  return os.str();
}

}  // namespace minicar
