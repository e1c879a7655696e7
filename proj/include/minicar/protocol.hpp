#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "minicar/engine.hpp"

namespace minicar {

// Wire protocol of the game gateway. Every message is one JSON text object
//
//   {"type": "hello" | "frame" | "command" | "event", "version": 1, "payload": {...}}
//
// carried as a single WebSocket text message, so message boundaries come from
// the channel framing. Numbers are SI units.
inline constexpr int kProtocolVersion = 1;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FrameVehicle {
  int id{0};
  double x{0.0};
  double y{0.0};
  double theta{0.0};
  double v{0.0};
  double psi{0.0};
  int lane{0};
  double lane_change_progress{0.0};
  bool is_played{false};
  ControlMode mode{ControlMode::kAutomatic};
};

struct Frame {
  long tick{0};
  double t{0.0};
  std::vector<FrameVehicle> vehicles{};
  // Events raised since the previous frame.
  std::vector<SimEvent> events{};
};

/// Builds a frame from the current state. `events` are the engine events with
/// index >= first_event.
Frame make_frame(const Simulation& sim, std::size_t first_event);

struct Message {
  std::string type{};
  int version{0};
  nlohmann::json payload{};
};

/// Parses one text message. Throws ProtocolError on malformed JSON, a missing
/// or mistyped envelope field, or a version other than kProtocolVersion.
/// Unknown `type` values are returned as-is for the caller to ignore.
Message decode_message(const std::string& text);

std::string encode_message(const std::string& type, const nlohmann::ordered_json& payload);

nlohmann::ordered_json frame_to_json(const Frame& frame);
nlohmann::ordered_json event_to_json(const SimEvent& event);

/// Command payload, e.g. {"vehicle": 3, "kind": "manual", "throttle": 0.5,
/// "steer": -0.2}. Kinds: manual, semi_automatic, mode_switch, stop, resume.
nlohmann::ordered_json command_to_json(const Command& command);

/// Inverse of command_to_json. Out-of-range throttle, steer, negative speed
/// setpoints and lane-change magnitudes are clamped; missing required fields,
/// unknown kinds or modes and non-finite numbers raise ProtocolError.
Command command_from_json(const nlohmann::json& payload);

std::string kind_name(Command::Type type);

/// Command logs are JSON lines: {"tick": 120, "command": {...}}.
std::string command_log_to_jsonl(const std::vector<std::pair<long, Command>>& log);
std::vector<std::pair<long, Command>> parse_command_log(std::istream& in);

}  // namespace minicar
