#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "minicar/coordination.hpp"
#include "minicar/estimation.hpp"
#include "minicar/idm.hpp"
#include "minicar/lane_change.hpp"
#include "minicar/track.hpp"
#include "minicar/tracking.hpp"
#include "minicar/vehicle.hpp"

namespace minicar {

enum class Policy { kEgocentric, kCooperative };

struct ScriptedEvent {
  double t{0.0};
  std::string type{"stop"};  // stop | resume
  int vehicle{0};
};

struct FleetConfig {
  int count{16};
  std::string placement{"even"};
  Policy policy{Policy::kEgocentric};
  std::string preset{"normal"};
  double initial_speed{0.35};
  // Vehicles a human may drive through the game gateway.
  std::vector<int> gamified{};
};

struct SensingConfig {
  bool estimated{true};
  MeasurementNoise noise{};
  // Diagonals of Q (x, y, theta, v, psi) and R (x, y, theta).
  std::array<double, 5> process_noise{1e-6, 1e-6, 1e-6, 1e-4, 1e-4};
  std::array<double, 3> measurement_noise{1e-6, 1e-6, 1e-5};
  std::array<double, 5> initial_sigma{0.001, 0.001, 0.003, 0.01, 0.01};
};

struct LaneChangeSettings {
  // Shortest blend length, used when v * gamma is smaller.
  double min_distance{0.7};
  // Executing or pending manoeuvres are abandoned after this many gamma
  // without progress.
  double abandon_factor{10.0};
  // Lateral clearance beyond the body width after which the source-lane
  // leader no longer constrains a changing vehicle.
  double clear_margin{0.01};
  // Jam distance kept to that leader while the body still overlaps its band.
  double band_jam_distance{0.02};
};

struct MetricsConfig {
  double warmup{20.0};
  double window{20.0};
  double stride{1.0};
  double waiting_speed{0.05};
};

struct GameConfig {
  // Speed reached with full throttle in manual mode; throttle -1 maps to 0.
  double manual_max_speed{0.8};
  double frame_rate{30.0};
  std::string initial_mode{"automatic"};
};

struct ScenarioConfig {
  std::string name{"scenario"};
  std::uint64_t seed{1};
  double duration{200.0};
  double dt{0.01};
  int planner_divider{1};
  bool halt_on_collision{false};

  TrackSpec track{};
  std::string vehicle_preset{"permissive"};
  VehicleLimits vehicle{};
  FleetConfig fleet{};
  IdmParams idm{};
  MobilParams mobil{};
  CoopParams coop{};
  TrackerParams tracker{};
  PidParams pid{};
  SensingConfig sensing{};
  LaneChangeSettings lane_change{};
  MetricsConfig metrics{};
  GameConfig game{};
  std::vector<ScriptedEvent> events{};

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace minicar
