#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "minicar/coordination.hpp"
#include "minicar/estimation.hpp"
#include "minicar/lane_change.hpp"
#include "minicar/scenario.hpp"
#include "minicar/track.hpp"
#include "minicar/tracking.hpp"
#include "minicar/vehicle.hpp"

namespace minicar {

enum class ControlMode { kManual, kSemiAutomatic, kAutomatic };

std::string to_string(ControlMode mode);
std::optional<ControlMode> parse_control_mode(const std::string& text);

/// A human input for one played vehicle. Out-of-range values are clamped
/// when applied, never rejected.
struct Command {
  enum class Type { kManual, kSemiAutomatic, kModeSwitch, kStop, kResume };

  Type type{Type::kManual};
  int vehicle{-1};
  // Manual: both in [-1, 1].
  double throttle{0.0};
  double steer{0.0};
  // Semi-automatic: replaces v0 when set.
  std::optional<double> speed_setpoint{};
  // Semi-automatic: -1 requests the lane to the left (inwards), +1 the lane to
  // the right, 0 none.
  int lane_change{0};
  ControlMode mode{ControlMode::kAutomatic};
};

struct SimEvent {
  long tick{0};
  double t{0.0};
  std::string type{};
  int vehicle{-1};
  int other{-1};
  int lane{-1};
  std::string detail{};
};

/// One row per vehicle per tick.
struct RecordRow {
  long tick{0};
  double t{0.0};
  int id{0};
  int lane{0};
  double s{0.0};
  double x{0.0};
  double y{0.0};
  double theta{0.0};
  double v{0.0};
  double psi{0.0};
  double lc_progress{0.0};
  double accel_cmd{0.0};
  // Held by a scripted stop; excluded from the waiting-queue metric.
  bool stopped{false};
};

struct RunRecord {
  ScenarioConfig config{};
  int vehicle_count{0};
  long ticks{0};
  bool halted{false};
  std::vector<RecordRow> rows{};
  std::vector<SimEvent> events{};
};

struct PendingIntent {
  int target_lane{-1};
  double since{0.0};
};

/// Runtime state of one car: ground truth plus everything its own planner
/// and controllers carry between ticks.
struct Vehicle {
  int id{0};
  VehicleState truth{};
  EstimatorState estimate{};
  std::mt19937_64 rng{};
  PidState pid{};
  // Speed setpoint integrated from the planner's acceleration.
  double v_set{0.0};
  double accel_cmd{0.0};
  double planned_accel{0.0};
  bool stopped{false};
  bool gamified{false};
  ControlMode mode{ControlMode::kAutomatic};
  double cooldown_until{-1.0};
  std::optional<PendingIntent> intent{};
  std::optional<LaneChangePath> path{};
  double lane_change_started{0.0};
  // Human inputs.
  double manual_throttle{0.0};
  double manual_steer{0.0};
  std::optional<double> semi_speed{};
  int lane_change_request{0};
};

/// Phase-start view of one vehicle as the planners see it.
struct AgentSnapshot {
  int id{0};
  int lane{0};
  double s{0.0};
  double v{0.0};
  Pose2 pose{};
  std::optional<LaneChangeState> lane_change{};
  double v_set{0.0};
  bool stopped{false};
  bool gamified{false};
  ControlMode mode{ControlMode::kAutomatic};
  double cooldown_until{-1.0};
  std::optional<PendingIntent> intent{};
  std::optional<double> semi_speed{};
  int lane_change_request{0};
};

struct Snapshot {
  long tick{0};
  double t{0.0};
  std::vector<AgentSnapshot> agents{};
  std::vector<TrafficAgent> traffic{};
  std::vector<VirtualVehicle> virtuals{};
};

/// Everything one planner decides in one tick. Applied in the sequential
/// commit after all vehicles have planned.
struct PlanOutput {
  double accel{0.0};
  double desired_speed{0.0};
  std::optional<int> start_change{};
  std::optional<PendingIntent> intent{};
  std::optional<VirtualVehicle> virtual_vehicle{};
  std::vector<SimEvent> events{};
};

/// Open-overlap test between two oriented rectangles: bodies that merely
/// touch do not collide.
bool footprints_overlap(const Footprint& a, const Footprint& b);

struct CollisionPair {
  int a{0};
  int b{0};
};

std::vector<CollisionPair> detect_collisions(const std::vector<Footprint>& bodies);

/// Body-aware gap from a car that is leaving a lane to the leader it is
/// leaving behind, measured only over the part of its body that still lies
/// within the leader's lateral band of half-width body_width/2 + margin.
/// Empty once no part of the body is inside the band.
std::optional<double> band_gap(const Pose2& follower, const Pose2& leader,
                               const VehicleLimits& limits, double margin);

class Simulation {
 public:
  explicit Simulation(ScenarioConfig config);
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const ScenarioConfig& config() const { return config_; }
  const Track& track() const { return track_; }
  long tick() const { return tick_; }
  double time() const { return static_cast<double>(tick_) * config_.dt; }
  long total_ticks() const { return total_ticks_; }
  bool finished() const { return halted_ || tick_ >= total_ticks_; }
  bool halted() const { return halted_; }

  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  const std::vector<VirtualVehicle>& virtuals() const { return virtuals_; }
  const std::vector<SimEvent>& events() const { return events_; }

  /// Queues a command for the next tick boundary.
  void submit(const Command& command);

  /// Commands applied so far, tagged with the tick at whose start they took
  /// effect. Replaying them reproduces the run.
  const std::vector<std::pair<long, Command>>& command_log() const { return command_log_; }

  /// Advances one tick through sense, plan, control and integrate.
  void step();
  void run_to_end();

  void set_recording(bool on) { recording_ = on; }
  RunRecord take_record();

  /// Phase-start view used by the planners. Exposed for tests.
  Snapshot snapshot() const;
  /// Called with the snapshot each planning tick uses, before any plan is
  /// committed. Meant for tracing and for checking planner purity.
  void set_snapshot_observer(std::function<void(const Snapshot&)> observer) {
    snapshot_observer_ = std::move(observer);
  }
  /// Pure function of the snapshot and the vehicle's own planner state.
  PlanOutput plan(const Snapshot& snap, int id) const;

 private:
  void place_vehicles();
  void apply_scripted_events();
  void apply_commands();
  void apply_command(const Command& c);
  void sense();
  void commit_plans(const Snapshot& snap, std::vector<PlanOutput>& plans);
  void control_and_integrate();
  void update_track_coordinates(Vehicle& v);
  void check_collisions();
  void record_state();
  void emit(SimEvent e);

  double body() const { return config_.vehicle.body_length; }
  LaneChangeModel lane_change_model(double v0) const;
  std::optional<int> start_lane_change(Vehicle& v, int target, const AgentSnapshot& a);

  ScenarioConfig config_;
  Track track_;
  EkfModel ekf_;
  std::vector<Vehicle> vehicles_;
  std::vector<VirtualVehicle> virtuals_;
  std::vector<SimEvent> events_;
  std::deque<Command> pending_commands_;
  std::vector<std::pair<long, Command>> command_log_;
  std::vector<RecordRow> rows_;
  std::vector<std::pair<int, int>> contacts_;
  std::size_t next_scripted_{0};
  long tick_{0};
  long total_ticks_{0};
  bool halted_{false};
  bool recording_{true};
  std::function<void(const Snapshot&)> snapshot_observer_;
};

/// Runs a scenario from start to end and returns the full record.
RunRecord run_scenario(const ScenarioConfig& config);

/// Runs a scenario while feeding it a command log as recorded by
/// Simulation::command_log(). Commands logged past the end of the run are
/// not applied; their number is stored in `unused_commands` when given.
/// Throws std::invalid_argument when the log's ticks decrease.
RunRecord replay_scenario(const ScenarioConfig& config,
                          const std::vector<std::pair<long, Command>>& log,
                          std::size_t* unused_commands = nullptr);

}  // namespace minicar
