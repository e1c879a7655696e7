#pragma once

#include <string>
#include <vector>

#include "minicar/engine.hpp"
#include "minicar/track.hpp"

namespace minicar {

struct ThroughputResult {
  double mean{0.0};   // cars/s
  double std{0.0};    // cars/s, population std over windows
  double window{0.0};
  std::vector<double> checkpoint_s{};
  std::vector<double> samples{};  // one value per window
};

/// Times at which each vehicle completes a lap past the checkpoint. Lap
/// progress is unwrapped from the lane fraction relative to the lane's
/// checkpoint, so lane changes never count as crossings.
std::vector<double> checkpoint_crossings(const RunRecord& record, const Track& track);

/// Crossings per second over sliding windows [t0, t0 + window) starting at
/// `warmup` and advancing by `stride` while the window fits in the run.
ThroughputResult compute_throughput(const RunRecord& record, const Track& track, double window,
                                    double warmup, double stride);
ThroughputResult compute_throughput(const RunRecord& record, const Track& track);

/// "0.245 ± 0.036"
std::string format_throughput(double mean, double std);

struct QueueStats {
  int max_queue{0};
  double max_queue_time{0.0};
  // Sum over ticks of waiting vehicles times dt.
  double stationary_vehicle_seconds{0.0};
};

/// A vehicle is waiting when slower than waiting_speed and not held by a
/// scripted stop. Only ticks at or after `warmup` count.
QueueStats compute_queue_stats(const RunRecord& record, double waiting_speed, double warmup);

struct LaneChangeCounts {
  int started{0};
  int completed{0};
  int abandoned{0};
  int denied{0};
  int intents{0};
};

LaneChangeCounts count_lane_changes(const RunRecord& record);
int count_collisions(const RunRecord& record);

struct RunSummary {
  ThroughputResult throughput{};
  QueueStats queue{};
  LaneChangeCounts lane_changes{};
  int collisions{0};
};

RunSummary summarize(const RunRecord& record, const Track& track);

}  // namespace minicar
