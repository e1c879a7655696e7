#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <stop_token>
#include <vector>

#include "minicar/engine.hpp"
#include "minicar/protocol.hpp"

namespace minicar {

/// Runs a simulation at wall-clock pace for live play.
///
/// The session thread is the only one touching the simulation while run() is
/// active. Other threads talk to it through submit() and release(), whose
/// commands are applied at the next tick boundary, and receive frames through
/// the frame sink, which is called on the session thread.
class GameSession {
 public:
  using FrameSink = std::function<void(const Frame&)>;

  explicit GameSession(ScenarioConfig config);

  void set_frame_sink(FrameSink sink) { sink_ = std::move(sink); }

  /// Thread-safe. Queues a command for the next tick boundary.
  void submit(const Command& command);

  /// Thread-safe. Returns a played vehicle to automatic mode at the next tick
  /// boundary; used when its controller disconnects.
  void release(int vehicle);

  /// Paces ticks to the steady clock, scaled by `time_scale` (1 = real time),
  /// until the simulation finishes or a stop is requested.
  void run(std::stop_token stop, double time_scale = 1.0);

  /// Advances `ticks` ticks immediately, publishing frames as run() would.
  void advance(long ticks);

  /// Access for setup before run() and for export after it returns.
  Simulation& simulation() { return sim_; }
  const Simulation& simulation() const { return sim_; }

  /// Number of frames published so far.
  long frames_published() const { return frames_; }

  /// Ticks at which frames are due: the first tick of each 1/frame_rate slot.
  bool frame_due(long tick) const;

 private:
  void step_once();

  Simulation sim_;
  FrameSink sink_;
  std::mutex inbox_mutex_;
  std::vector<Command> inbox_;
  std::size_t events_sent_{0};
  long frames_{0};
};

}  // namespace minicar
