#include "minicar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace minicar {

std::vector<double> checkpoint_crossings(const RunRecord& record, const Track& track) {
  const std::size_t n = static_cast<std::size_t>(record.vehicle_count);
  std::vector<double> unwrapped(n, 0.0), previous(n, 0.0), best_floor(n, 0.0);
  std::vector<bool> seen(n, false);
  std::vector<double> times;

  for (const auto& row : record.rows) {
    const auto i = static_cast<std::size_t>(row.id);
    const Lane& lane = track.lane(row.lane);
    const double frac = lane.wrap(row.s - track.checkpoint(row.lane)) / lane.length();
    if (!seen[i]) {
      seen[i] = true;
      previous[i] = frac;
      unwrapped[i] = frac;
      best_floor[i] = std::floor(frac);
      continue;
    }
    unwrapped[i] += std::remainder(frac - previous[i], 1.0);
    previous[i] = frac;
    const double f = std::floor(unwrapped[i]);
    if (f > best_floor[i]) {
      best_floor[i] = f;
      times.push_back(row.t);
    }
  }
  std::sort(times.begin(), times.end());
  return times;
}

ThroughputResult compute_throughput(const RunRecord& record, const Track& track, double window,
                                    double warmup, double stride) {
  ThroughputResult r;
  r.window = window;
  for (std::size_t i = 0; i < track.lane_count(); ++i) r.checkpoint_s.push_back(track.checkpoint(static_cast<int>(i)));

  const double duration = static_cast<double>(record.ticks) * record.config.dt;
  const std::vector<double> crossings = checkpoint_crossings(record, track);
  constexpr double kEps = 1e-9;
  for (long k = 0;; ++k) {
    const double t0 = warmup + static_cast<double>(k) * stride;
    if (t0 + window > duration + kEps) break;
    const auto lo = std::lower_bound(crossings.begin(), crossings.end(), t0 - kEps);
    const auto hi = std::lower_bound(crossings.begin(), crossings.end(), t0 + window - kEps);
    r.samples.push_back(static_cast<double>(hi - lo) / window);
  }
  if (r.samples.empty()) return r;
  double sum = 0.0;
  for (double x : r.samples) sum += x;
  r.mean = sum / static_cast<double>(r.samples.size());
  double var = 0.0;
  for (double x : r.samples) var += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(var / static_cast<double>(r.samples.size()));
  return r;
}

ThroughputResult compute_throughput(const RunRecord& record, const Track& track) {
  const auto& m = record.config.metrics;
  return compute_throughput(record, track, m.window, m.warmup, m.stride);
}

std::string format_throughput(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f ± %.3f", mean, std);
  return buf;
}

QueueStats compute_queue_stats(const RunRecord& record, double waiting_speed, double warmup) {
  QueueStats q;
  const double dt = record.config.dt;
  long current_tick = -1;
  int waiting = 0;
  double current_t = 0.0;
  auto flush = [&] {
    if (current_tick < 0 || current_t < warmup - 1e-9) return;
    if (waiting > q.max_queue) {
      q.max_queue = waiting;
      q.max_queue_time = current_t;
    }
    q.stationary_vehicle_seconds += waiting * dt;
  };
  for (const auto& row : record.rows) {
    if (row.tick != current_tick) {
      flush();
      current_tick = row.tick;
      current_t = row.t;
      waiting = 0;
    }
    if (!row.stopped && row.v < waiting_speed) ++waiting;
  }
  flush();
  return q;
}

LaneChangeCounts count_lane_changes(const RunRecord& record) {
  LaneChangeCounts c;
  for (const auto& e : record.events) {
    if (e.type == "lane_change_start") ++c.started;
    if (e.type == "lane_change_complete") ++c.completed;
    if (e.type == "lane_change_abandon") ++c.abandoned;
    if (e.type == "lane_change_denied") ++c.denied;
    if (e.type == "intent_created") ++c.intents;
  }
  return c;
}

int count_collisions(const RunRecord& record) {
  return static_cast<int>(std::count_if(record.events.begin(), record.events.end(),
                                        [](const SimEvent& e) { return e.type == "collision"; }));
}

RunSummary summarize(const RunRecord& record, const Track& track) {
  RunSummary s;
  s.throughput = compute_throughput(record, track);
  s.queue = compute_queue_stats(record, record.config.metrics.waiting_speed, record.config.metrics.warmup);
  s.lane_changes = count_lane_changes(record);
  s.collisions = count_collisions(record);
  return s;
}

}  // namespace minicar
