#include "minicar/idm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace minicar {

void IdmParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(v0 > 0.0, "idm.v0 must be positive");
  require(T > 0.0, "idm.T must be positive");
  require(alpha > 0.0, "idm.alpha must be positive");
  require(beta > 0.0, "idm.beta must be positive");
  require(delta >= 1.0, "idm.delta must be at least 1");
  require(s0 > 0.0, "idm.s0 must be positive");
}

double desired_gap(double v, double approach_rate, const IdmParams& p, double s0) {
  const double s_star = s0 + p.T * v + v * approach_rate / (2.0 * std::sqrt(p.alpha * p.beta));
  return std::max(s_star, s0);
}

double desired_gap(double v, double approach_rate, const IdmParams& p) {
  return desired_gap(v, approach_rate, p, p.s0);
}

double idm_acceleration(double v, const std::optional<FrontTarget>& target, const IdmParams& p,
                        double effective_s0, double max_decel) {
  double a = p.alpha * (1.0 - std::pow(v / p.v0, p.delta));
  if (target) {
    if (!(target->gap > 0.0)) return -max_decel;
    const double ratio = desired_gap(v, target->approach_rate, p, effective_s0) / target->gap;
    a -= p.alpha * ratio * ratio;
  }
  return std::clamp(a, -max_decel, p.alpha);
}

double escape_distance(double v_front, double v0, double length) {
  const double r = v_front / v0;
  if (r > 1.0) return 0.0;
  return 2.0 * length * (2.0 * r * r * r - 3.0 * r * r + 1.0);
}

double effective_jam_distance(const IdmParams& p, double v_front, double length) {
  return p.s0 + escape_distance(std::max(v_front, 0.0), p.v0, length);
}

double cidm_acceleration(double v, const std::optional<FrontTarget>& real_front,
                         const std::optional<FrontTarget>& virtual_front, const IdmParams& p,
                         double effective_s0_real, double effective_s0_virtual, double max_decel) {
  const double a_real = idm_acceleration(v, real_front, p, effective_s0_real, max_decel);
  if (!virtual_front) return a_real;
  const double a_virtual = idm_acceleration(v, virtual_front, p, effective_s0_virtual, max_decel);
  return std::min(virtual_front->weight * a_virtual, a_real);
}

double boosted_desired_speed(double v0, double weight, double trail_gap, double c,
                             double max_speed) {
  const double boosted = v0 * (1.0 + weight * (c - trail_gap) / c);
  return std::min(std::max(boosted, v0), std::max(max_speed, v0));
}

IdmParams idm_preset(const std::string& name) {
  if (name == "normal") return {0.4, 2.0, 0.5, 0.3, 4.0, 0.1};
  if (name == "aggressive") return {0.4, 2.0, 1.0, 0.5, 4.0, 0.1};
  throw std::invalid_argument("unknown parameter preset '" + name + "'");
}

}  // namespace minicar
