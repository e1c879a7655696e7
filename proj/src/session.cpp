#include "minicar/session.hpp"

#include <cmath>
#include <thread>

namespace minicar {

GameSession::GameSession(ScenarioConfig config) : sim_(std::move(config)) {}

void GameSession::submit(const Command& command) {
  std::lock_guard lock(inbox_mutex_);
  inbox_.push_back(command);
}

void GameSession::release(int vehicle) {
  Command c;
  c.type = Command::Type::kModeSwitch;
  c.vehicle = vehicle;
  c.mode = ControlMode::kAutomatic;
  submit(c);
}

bool GameSession::frame_due(long tick) const {
  const double rate = sim_.config().game.frame_rate;
  const double dt = sim_.config().dt;
  if (tick == 0) return true;
  // A frame is due when the tick enters a new frame slot.
  const auto slot = [&](long k) { return std::floor(static_cast<double>(k) * dt * rate + 1e-9); };
  return slot(tick) > slot(tick - 1);
}

void GameSession::step_once() {
  {
    std::lock_guard lock(inbox_mutex_);
    for (const auto& c : inbox_) sim_.submit(c);
    inbox_.clear();
  }
  sim_.step();
  if (frame_due(sim_.tick()) || sim_.finished()) {
    const Frame frame = make_frame(sim_, events_sent_);
    events_sent_ = sim_.events().size();
    ++frames_;
    if (sink_) sink_(frame);
  }
}

void GameSession::advance(long ticks) {
  for (long i = 0; i < ticks && !sim_.finished(); ++i) step_once();
}

void GameSession::run(std::stop_token stop, double time_scale) {
  using clock = std::chrono::steady_clock;
  const double dt = sim_.config().dt;
  const long start_tick = sim_.tick();
  const auto start = clock::now();
  if (frames_ == 0) {
    const Frame first = make_frame(sim_, 0);
    events_sent_ = sim_.events().size();
    ++frames_;
    if (sink_) sink_(first);
  }
  while (!stop.stop_requested() && !sim_.finished()) {
    const double elapsed = std::chrono::duration<double>(clock::now() - start).count() * time_scale;
    const long due = start_tick + static_cast<long>(std::floor(elapsed / dt + 1e-9));
    while (sim_.tick() < due && !sim_.finished() && !stop.stop_requested()) step_once();
    const double next_wall = static_cast<double>(sim_.tick() + 1 - start_tick) * dt / time_scale;
    std::this_thread::sleep_until(start + std::chrono::duration_cast<clock::duration>(
                                              std::chrono::duration<double>(next_wall)));
  }
}

}  // namespace minicar
