#include "minicar/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace minicar {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

template <class F>
void rethrow_as_config_error(F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
  require(std::isfinite(duration) && duration >= 0.0, "duration must be non-negative");
  require(planner_divider >= 1, "planner_divider must be at least 1");

  rethrow_as_config_error([&] { vehicle.validate(); });
  rethrow_as_config_error([&] { idm.validate(); });
  rethrow_as_config_error([&] { mobil.validate(); });
  rethrow_as_config_error([&] { coop.validate(); });
  rethrow_as_config_error([&] {
    const Track t = build_track(track);
    (void)t;
  });

  require(fleet.count >= 1, "fleet.count must be at least 1");
  require(fleet.placement == "even", "fleet.placement must be \"even\"");
  require(fleet.initial_speed >= 0.0 && fleet.initial_speed <= vehicle.max_speed,
          "fleet.initial_speed must be within [0, vehicle.max_speed]");
  for (int id : fleet.gamified) {
    require(id >= 0 && id < fleet.count,
            "fleet.gamified entry " + std::to_string(id) + " is not a vehicle id");
  }

  require(tracker.l1 > 0.0, "tracker.l1 must be positive");
  require(tracker.l2 > 0.0, "tracker.l2 must be positive");
  require(pid.kp >= 0.0 && pid.ki >= 0.0 && pid.kd >= 0.0, "pid gains must be non-negative");
  require(pid.integral_limit >= 0.0, "pid.integral_limit must be non-negative");

  require(sensing.noise.sigma_xy >= 0.0, "sensing.sigma_xy must be non-negative");
  require(sensing.noise.sigma_theta >= 0.0, "sensing.sigma_theta must be non-negative");
  for (double q : sensing.process_noise) require(q >= 0.0, "sensing.process_noise must be non-negative");
  for (double r : sensing.measurement_noise) {
    require(r > 0.0, "sensing.measurement_noise must be positive");
  }
  for (double s : sensing.initial_sigma) require(s >= 0.0, "sensing.initial_sigma must be non-negative");

  require(lane_change.min_distance > 0.0, "lane_change.min_distance must be positive");
  require(lane_change.abandon_factor > 0.0, "lane_change.abandon_factor must be positive");
  require(lane_change.clear_margin >= 0.0, "lane_change.clear_margin must be non-negative");
  require(lane_change.band_jam_distance > 0.0, "lane_change.band_jam_distance must be positive");

  require(metrics.warmup >= 0.0, "metrics.warmup must be non-negative");
  require(metrics.window > 0.0, "metrics.window must be positive");
  require(metrics.stride > 0.0, "metrics.stride must be positive");
  require(metrics.waiting_speed >= 0.0, "metrics.waiting_speed must be non-negative");

  require(game.manual_max_speed > 0.0 && game.manual_max_speed <= vehicle.max_speed,
          "game.manual_max_speed must be within (0, vehicle.max_speed]");
  require(game.frame_rate > 0.0, "game.frame_rate must be positive");
  require(game.initial_mode == "manual" || game.initial_mode == "semi_automatic" ||
              game.initial_mode == "automatic",
          "game.initial_mode must be manual, semi_automatic or automatic");

  double prev_t = -INFINITY;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const std::string key = "events[" + std::to_string(i) + "]";
    require(e.t >= prev_t, key + ".t: events must be sorted by time");
    require(e.type == "stop" || e.type == "resume", key + ".type must be stop or resume");
    require(e.vehicle >= 0 && e.vehicle < fleet.count, key + ".vehicle is not a vehicle id");
    prev_t = e.t;
  }
}

}  // namespace minicar
