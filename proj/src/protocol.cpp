#include "minicar/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <istream>

namespace minicar {

namespace {

double finite_number(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw ProtocolError(std::string("command field '") + key + "' must be a number");
  }
  const double x = it->get<double>();
  if (!std::isfinite(x)) throw ProtocolError(std::string("command field '") + key + "' is not finite");
  return x;
}

Command::Type parse_kind(const std::string& kind) {
  if (kind == "manual") return Command::Type::kManual;
  if (kind == "semi_automatic") return Command::Type::kSemiAutomatic;
  if (kind == "mode_switch") return Command::Type::kModeSwitch;
  if (kind == "stop") return Command::Type::kStop;
  if (kind == "resume") return Command::Type::kResume;
  throw ProtocolError("unknown command kind '" + kind + "'");
}

}  // namespace

std::string kind_name(Command::Type type) {
  switch (type) {
    case Command::Type::kManual:
      return "manual";
    case Command::Type::kSemiAutomatic:
      return "semi_automatic";
    case Command::Type::kModeSwitch:
      return "mode_switch";
    case Command::Type::kStop:
      return "stop";
    case Command::Type::kResume:
      return "resume";
  }
  return "manual";
}

Frame make_frame(const Simulation& sim, std::size_t first_event) {
  Frame f;
  f.tick = sim.tick();
  f.t = sim.time();
  for (const auto& v : sim.vehicles()) {
    FrameVehicle fv;
    fv.id = v.id;
    fv.x = v.truth.x;
    fv.y = v.truth.y;
    fv.theta = v.truth.theta;
    fv.v = v.truth.v;
    fv.psi = v.truth.psi;
    fv.lane = v.truth.lane;
    fv.lane_change_progress = v.truth.lane_change ? v.truth.lane_change->progress : 0.0;
    fv.is_played = v.gamified;
    fv.mode = v.mode;
    f.vehicles.push_back(fv);
  }
  const auto& events = sim.events();
  for (std::size_t i = first_event; i < events.size(); ++i) f.events.push_back(events[i]);
  return f;
}

Message decode_message(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");
  const auto type = j.find("type");
  if (type == j.end() || !type->is_string()) throw ProtocolError("message lacks a string 'type'");
  const auto version = j.find("version");
  if (version == j.end() || !version->is_number_integer()) {
    throw ProtocolError("message lacks an integer 'version'");
  }
  Message m;
  m.type = type->get<std::string>();
  m.version = version->get<int>();
  if (m.version != kProtocolVersion) {
    throw ProtocolError("unsupported protocol version " + std::to_string(m.version) +
                        " (expected " + std::to_string(kProtocolVersion) + ")");
  }
  const auto payload = j.find("payload");
  m.payload = payload == j.end() ? nlohmann::json::object() : *payload;
  return m;
}

std::string encode_message(const std::string& type, const nlohmann::ordered_json& payload) {
  nlohmann::ordered_json j;
  j["type"] = type;
  j["version"] = kProtocolVersion;
  j["payload"] = payload;
  return j.dump();
}

nlohmann::ordered_json event_to_json(const SimEvent& e) {
  return {{"tick", e.tick}, {"t", e.t},         {"type", e.type},    {"vehicle", e.vehicle},
          {"other", e.other}, {"lane", e.lane}, {"detail", e.detail}};
}

nlohmann::ordered_json frame_to_json(const Frame& frame) {
  nlohmann::ordered_json vehicles = nlohmann::ordered_json::array();
  for (const auto& v : frame.vehicles) {
    vehicles.push_back({{"id", v.id},
                        {"x", v.x},
                        {"y", v.y},
                        {"theta", v.theta},
                        {"v", v.v},
                        {"psi", v.psi},
                        {"lane", v.lane},
                        {"lane_change_progress", v.lane_change_progress},
                        {"is_played", v.is_played},
                        {"mode", to_string(v.mode)}});
  }
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  for (const auto& e : frame.events) events.push_back(event_to_json(e));
  return {{"tick", frame.tick}, {"t", frame.t}, {"vehicles", vehicles}, {"events", events}};
}

nlohmann::ordered_json command_to_json(const Command& c) {
  nlohmann::ordered_json j;
  j["vehicle"] = c.vehicle;
  j["kind"] = kind_name(c.type);
  switch (c.type) {
    case Command::Type::kManual:
      j["throttle"] = c.throttle;
      j["steer"] = c.steer;
      break;
    case Command::Type::kSemiAutomatic:
      if (c.speed_setpoint) j["speed_setpoint"] = *c.speed_setpoint;
      j["lane_change"] = c.lane_change < 0 ? "left" : (c.lane_change > 0 ? "right" : "none");
      break;
    case Command::Type::kModeSwitch:
      j["mode"] = to_string(c.mode);
      break;
    case Command::Type::kStop:
    case Command::Type::kResume:
      break;
  }
  return j;
}

Command command_from_json(const nlohmann::json& p) {
  if (!p.is_object()) throw ProtocolError("command payload must be an object");
  Command c;
  const auto vehicle = p.find("vehicle");
  if (vehicle == p.end() || !vehicle->is_number_integer()) {
    throw ProtocolError("command field 'vehicle' must be an integer");
  }
  c.vehicle = vehicle->get<int>();
  const auto kind = p.find("kind");
  if (kind == p.end() || !kind->is_string()) throw ProtocolError("command field 'kind' must be a string");
  c.type = parse_kind(kind->get<std::string>());

  switch (c.type) {
    case Command::Type::kManual:
      c.throttle = std::clamp(finite_number(p, "throttle"), -1.0, 1.0);
      c.steer = std::clamp(finite_number(p, "steer"), -1.0, 1.0);
      break;
    case Command::Type::kSemiAutomatic: {
      if (p.contains("speed_setpoint") && !p.at("speed_setpoint").is_null()) {
        c.speed_setpoint = std::max(0.0, finite_number(p, "speed_setpoint"));
      }
      const auto lc = p.find("lane_change");
      if (lc != p.end() && !lc->is_null()) {
        if (lc->is_string()) {
          const auto s = lc->get<std::string>();
          if (s == "left") {
            c.lane_change = -1;
          } else if (s == "right") {
            c.lane_change = 1;
          } else if (s == "none") {
            c.lane_change = 0;
          } else {
            throw ProtocolError("command field 'lane_change' must be left, right or none");
          }
        } else if (lc->is_number()) {
          const double d = finite_number(p, "lane_change");
          c.lane_change = d < 0.0 ? -1 : (d > 0.0 ? 1 : 0);
        } else {
          throw ProtocolError("command field 'lane_change' must be left, right or none");
        }
      }
      break;
    }
    case Command::Type::kModeSwitch: {
      const auto mode = p.find("mode");
      if (mode == p.end() || !mode->is_string()) throw ProtocolError("command field 'mode' must be a string");
      const auto parsed = parse_control_mode(mode->get<std::string>());
      if (!parsed) throw ProtocolError("unknown control mode '" + mode->get<std::string>() + "'");
      c.mode = *parsed;
      break;
    }
    case Command::Type::kStop:
    case Command::Type::kResume:
      break;
  }
  return c;
}

std::string command_log_to_jsonl(const std::vector<std::pair<long, Command>>& log) {
  std::string out;
  for (const auto& [tick, command] : log) {
    nlohmann::ordered_json j;
    j["tick"] = tick;
    j["command"] = command_to_json(command);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<std::pair<long, Command>> parse_command_log(std::istream& in) {
  std::vector<std::pair<long, Command>> log;
  std::string line;
  long line_no = 0;
  long previous = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.contains("tick") || !j.at("tick").is_number_integer() || !j.contains("command")) {
        throw ProtocolError("expected {\"tick\": <int>, \"command\": {...}}");
      }
      const long tick = j.at("tick").get<long>();
      if (tick < previous) throw ProtocolError("ticks must not decrease");
      previous = tick;
      log.emplace_back(tick, command_from_json(j.at("command")));
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError("command log line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ProtocolError& e) {
      throw ProtocolError("command log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

}  // namespace minicar
