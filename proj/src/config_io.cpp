#include "minicar/config_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace minicar {

using Json = nlohmann::ordered_json;

namespace {

std::string type_name(const Json& j) { return j.type_name(); }

[[noreturn]] void type_error(const std::string& key, const char* expected, const Json& got) {
  throw ConfigError("config key '" + key + "': expected " + expected + ", got " + type_name(got));
}

void read(const std::string& key, const Json& j, double& out) {
  if (!j.is_number()) type_error(key, "a number", j);
  out = j.get<double>();
  if (!std::isfinite(out)) throw ConfigError("config key '" + key + "': value must be finite");
}

void read(const std::string& key, const Json& j, int& out) {
  if (!j.is_number_integer()) type_error(key, "an integer", j);
  out = j.get<int>();
}

void read(const std::string& key, const Json& j, std::uint64_t& out) {
  if (!j.is_number_unsigned()) type_error(key, "a non-negative integer", j);
  out = j.get<std::uint64_t>();
}

void read(const std::string& key, const Json& j, bool& out) {
  if (!j.is_boolean()) type_error(key, "true or false", j);
  out = j.get<bool>();
}

void read(const std::string& key, const Json& j, std::string& out) {
  if (!j.is_string()) type_error(key, "a string", j);
  out = j.get<std::string>();
}

void read(const std::string& key, const Json& j, Policy& out) {
  std::string s;
  read(key, j, s);
  if (s == "egocentric") {
    out = Policy::kEgocentric;
  } else if (s == "cooperative") {
    out = Policy::kCooperative;
  } else {
    throw ConfigError("config key '" + key + "': unknown policy '" + s +
                      "' (expected egocentric or cooperative)");
  }
}

void read(const std::string& key, const Json& j, ScriptedEvent& out);
Json write(const ScriptedEvent& e);

template <class T>
void read(const std::string& key, const Json& j, std::vector<T>& out) {
  if (!j.is_array()) type_error(key, "an array", j);
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    T v{};
    read(key + "[" + std::to_string(i) + "]", j[i], v);
    out.push_back(v);
  }
}

template <std::size_t N>
void read(const std::string& key, const Json& j, std::array<double, N>& out) {
  if (!j.is_array() || j.size() != N) {
    throw ConfigError("config key '" + key + "': expected an array of " + std::to_string(N) +
                      " numbers");
  }
  for (std::size_t i = 0; i < N; ++i) read(key + "[" + std::to_string(i) + "]", j[i], out[i]);
}

void read(const std::string& key, const Json& j, ScriptedEvent& out) {
  if (!j.is_object()) type_error(key, "an object", j);
  for (const auto& [k, v] : j.items()) {
    const std::string sub = key + "." + k;
    if (k == "t") {
      read(sub, v, out.t);
    } else if (k == "type") {
      read(sub, v, out.type);
    } else if (k == "vehicle") {
      read(sub, v, out.vehicle);
    } else {
      throw ConfigError("unknown config key '" + sub + "'");
    }
  }
}

Json write(double v) { return v; }
Json write(int v) { return v; }
Json write(std::uint64_t v) { return v; }
Json write(bool v) { return v; }
Json write(const std::string& v) { return v; }
Json write(Policy p) { return p == Policy::kCooperative ? "cooperative" : "egocentric"; }
template <class T>
Json write(const std::vector<T>& v) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back(write(x));
  return a;
}
template <std::size_t N>
Json write(const std::array<double, N>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}
Json write(const ScriptedEvent& e) {
  Json o = Json::object();
  o["t"] = e.t;
  o["type"] = e.type;
  o["vehicle"] = e.vehicle;
  return o;
}

// Every configurable field with its dotted key. The order here is the order
// of the resolved-config echo.
template <class F>
void for_each_field(ScenarioConfig& c, F&& f) {
  f("name", c.name);
  f("seed", c.seed);
  f("duration", c.duration);
  f("dt", c.dt);
  f("planner_divider", c.planner_divider);
  f("halt_on_collision", c.halt_on_collision);

  f("track.lane_lengths", c.track.lane_lengths);
  f("track.lane_spacing", c.track.lane_spacing);
  f("track.end_radius", c.track.end_radius);
  f("track.lane_width", c.track.lane_width);
  f("track.checkpoint_s", c.track.checkpoint_s);

  f("vehicle.preset", c.vehicle_preset);
  f("vehicle.wheelbase", c.vehicle.wheelbase);
  f("vehicle.max_steer", c.vehicle.max_steer);
  f("vehicle.max_steer_rate", c.vehicle.max_steer_rate);
  f("vehicle.max_speed", c.vehicle.max_speed);
  f("vehicle.max_accel", c.vehicle.max_accel);
  f("vehicle.max_decel", c.vehicle.max_decel);
  f("vehicle.body_length", c.vehicle.body_length);
  f("vehicle.body_width", c.vehicle.body_width);
  f("vehicle.min_turn_radius", c.vehicle.min_turn_radius);

  f("fleet.count", c.fleet.count);
  f("fleet.placement", c.fleet.placement);
  f("fleet.policy", c.fleet.policy);
  f("fleet.preset", c.fleet.preset);
  f("fleet.initial_speed", c.fleet.initial_speed);
  f("fleet.gamified", c.fleet.gamified);

  f("idm.v0", c.idm.v0);
  f("idm.T", c.idm.T);
  f("idm.alpha", c.idm.alpha);
  f("idm.beta", c.idm.beta);
  f("idm.delta", c.idm.delta);
  f("idm.s0", c.idm.s0);

  f("mobil.politeness", c.mobil.politeness);
  f("mobil.b_safe", c.mobil.b_safe);
  f("mobil.delta_a_threshold", c.mobil.delta_a_threshold);
  f("mobil.gamma", c.mobil.gamma);

  f("coop.c", c.coop.c);
  f("coop.kappa_u", c.coop.kappa_u);

  f("tracker.l1", c.tracker.l1);
  f("tracker.l2", c.tracker.l2);

  f("pid.kp", c.pid.kp);
  f("pid.ki", c.pid.ki);
  f("pid.kd", c.pid.kd);
  f("pid.integral_limit", c.pid.integral_limit);

  f("sensing.estimated", c.sensing.estimated);
  f("sensing.sigma_xy", c.sensing.noise.sigma_xy);
  f("sensing.sigma_theta", c.sensing.noise.sigma_theta);
  f("sensing.process_noise", c.sensing.process_noise);
  f("sensing.measurement_noise", c.sensing.measurement_noise);
  f("sensing.initial_sigma", c.sensing.initial_sigma);

  f("lane_change.min_distance", c.lane_change.min_distance);
  f("lane_change.abandon_factor", c.lane_change.abandon_factor);
  f("lane_change.clear_margin", c.lane_change.clear_margin);
  f("lane_change.band_jam_distance", c.lane_change.band_jam_distance);

  f("metrics.warmup", c.metrics.warmup);
  f("metrics.window", c.metrics.window);
  f("metrics.stride", c.metrics.stride);
  f("metrics.waiting_speed", c.metrics.waiting_speed);

  f("game.manual_max_speed", c.game.manual_max_speed);
  f("game.frame_rate", c.game.frame_rate);
  f("game.initial_mode", c.game.initial_mode);

  f("events", c.events);
}

// Keys whose values are angles and therefore accept a _deg variant.
bool is_angle_key(const std::string& key) {
  return key == "vehicle.max_steer" || key == "vehicle.max_steer_rate" ||
         key == "sensing.sigma_theta";
}

void flatten(const Json& j, const std::string& prefix, std::map<std::string, Json>& out,
             std::vector<std::string>& order) {
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      flatten(v, key, out, order);
    } else {
      if (out.find(key) == out.end()) order.push_back(key);
      out[key] = v;
    }
  }
}

// Folds a _deg key into its radian counterpart.
std::pair<std::string, Json> normalize_key(const std::string& key, const Json& value) {
  constexpr std::string_view suffix = "_deg";
  if (key.size() > suffix.size() && key.ends_with(suffix)) {
    const std::string base = key.substr(0, key.size() - suffix.size());
    if (!is_angle_key(base)) throw ConfigError("unknown config key '" + key + "'");
    if (!value.is_number()) type_error(key, "a number", value);
    return {base, value.get<double>() * std::numbers::pi / 180.0};
  }
  return {key, value};
}

Json parse_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return text;
  }
}

}  // namespace

Override parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + text + "' must have the form key=value");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  ScenarioConfig c;
  for_each_field(c, [&](const char* key, auto&) { keys.emplace_back(key); });
  return keys;
}

ScenarioConfig resolve_config(const Json& doc, const std::vector<Override>& overrides) {
  if (!doc.is_object()) throw ConfigError("config root must be an object");

  std::map<std::string, Json> flat_raw;
  std::vector<std::string> order;
  flatten(doc, "", flat_raw, order);

  std::map<std::string, Json> values;
  for (const auto& raw_key : order) {
    auto [key, value] = normalize_key(raw_key, flat_raw[raw_key]);
    if (values.count(key) != 0) {
      throw ConfigError("config key '" + key + "' is given both in radians and in degrees");
    }
    values[key] = value;
  }
  for (const auto& [raw_key, text] : overrides) {
    auto [key, value] = normalize_key(raw_key, parse_value(text));
    values[key] = value;
  }

  ScenarioConfig config;
  auto preset_of = [&](const char* key, std::string& into) {
    if (auto it = values.find(key); it != values.end()) read(key, it->second, into);
  };
  preset_of("fleet.preset", config.fleet.preset);
  preset_of("vehicle.preset", config.vehicle_preset);
  try {
    config.idm = idm_preset(config.fleet.preset);
    config.mobil = mobil_preset(config.fleet.preset);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config key 'fleet.preset': ") + e.what());
  }
  try {
    config.vehicle = vehicle_preset(config.vehicle_preset);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config key 'vehicle.preset': ") + e.what());
  }

  std::size_t consumed = 0;
  for_each_field(config, [&](const char* key, auto& field) {
    if (auto it = values.find(key); it != values.end()) {
      read(key, it->second, field);
      ++consumed;
    }
  });
  if (consumed != values.size()) {
    const auto known = config_keys();
    for (const auto& [key, _] : values) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  }

  // Quantities that follow from others unless they were given explicitly.
  if (values.count("vehicle.min_turn_radius") == 0) {
    config.vehicle.min_turn_radius = config.vehicle.wheelbase / std::tan(config.vehicle.max_steer);
  }
  if (values.count("tracker.l1") == 0) config.tracker.l1 = config.vehicle.wheelbase;
  if (values.count("tracker.l2") == 0) config.tracker.l2 = 2.3 * config.vehicle.wheelbase;
  if (values.count("mobil.b_safe") == 0) config.mobil.b_safe = 0.7 * config.idm.alpha;
  if (values.count("coop.kappa_u") == 0) config.coop.kappa_u = 1.0 / config.coop.c;
  config.mobil.cooperative = config.fleet.policy == Policy::kCooperative;

  config.validate();
  return config;
}

ScenarioConfig load_config(const std::filesystem::path& path,
                           const std::vector<Override>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config not found: " + path.string());
  Json doc;
  try {
    doc = Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  // An exported summary carries the resolved config of its run.
  if (doc.is_object() && doc.contains("config") && doc.contains("throughput") &&
      doc["config"].is_object()) {
    return resolve_config(doc["config"], overrides);
  }
  return resolve_config(doc, overrides);
}

Json config_to_json(const ScenarioConfig& config) {
  ScenarioConfig copy = config;
  Json root = Json::object();
  for_each_field(copy, [&](const char* key, auto& field) {
    Json* node = &root;
    std::string_view rest(key);
    for (auto dot = rest.find('.'); dot != std::string_view::npos; dot = rest.find('.')) {
      node = &(*node)[std::string(rest.substr(0, dot))];
      rest.remove_prefix(dot + 1);
    }
    (*node)[std::string(rest)] = write(field);
  });
  return root;
}

}  // namespace minicar
