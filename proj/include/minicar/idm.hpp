#pragma once

#include <optional>
#include <string>

namespace minicar {

struct IdmParams {
  double v0{0.4};
  double T{2.0};
  double alpha{0.5};
  double beta{0.3};
  double delta{4.0};
  double s0{0.1};

  void validate() const;
};

/// A leader as seen by a follower. approach_rate is follower speed minus
/// leader speed (positive when closing in).
struct FrontTarget {
  double gap{0.0};
  double approach_rate{0.0};
  double front_speed{0.0};
  double weight{1.0};
  bool is_virtual{false};
};

/// s* = s0 + T v + v dv / (2 sqrt(alpha beta)), floored at s0.
double desired_gap(double v, double approach_rate, const IdmParams& p, double s0);
double desired_gap(double v, double approach_rate, const IdmParams& p);

/// IDM acceleration with the given effective jam distance. Without a target
/// the interaction term is dropped. The result lies in [-max_decel, alpha];
/// a non-positive gap yields -max_decel.
double idm_acceleration(double v, const std::optional<FrontTarget>& target, const IdmParams& p,
                        double effective_s0, double max_decel = 2.0);

/// Extra jam distance behind slow leaders: 2L(2r^3 - 3r^2 + 1) with
/// r = v_f / v0, zero once the leader is faster than v0.
double escape_distance(double v_front, double v0, double length);

/// s0 plus the escape distance for the given leader speed.
double effective_jam_distance(const IdmParams& p, double v_front, double length);

/// min(w_v * a_virtual, a_real); plain IDM when no virtual leader is present.
double cidm_acceleration(double v, const std::optional<FrontTarget>& real_front,
                         const std::optional<FrontTarget>& virtual_front, const IdmParams& p,
                         double effective_s0_real, double effective_s0_virtual,
                         double max_decel = 2.0);

/// v0 (1 + w_v (c - s_trail) / c), kept within [v0, max_speed].
double boosted_desired_speed(double v0, double weight, double trail_gap, double c,
                             double max_speed);

/// Table 3 bundles: "normal" or "aggressive".
IdmParams idm_preset(const std::string& name);

}  // namespace minicar
