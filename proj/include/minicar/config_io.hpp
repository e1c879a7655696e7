#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "minicar/scenario.hpp"

namespace minicar {

/// A dotted-key override such as {"idm.v0", "0.5"}. The value is parsed as
/// JSON when possible and taken as a plain string otherwise.
using Override = std::pair<std::string, std::string>;

/// Parses "key=value". Throws ConfigError when there is no '='.
Override parse_override(const std::string& text);

/// Builds a scenario from a JSON document plus overrides.
///
/// Resolution order: built-in defaults, then the parameter bundles named by
/// fleet.preset and vehicle.preset, then every key given in the document,
/// then the overrides. Keys ending in _deg are converted to radians and
/// stored under the key without the suffix. Unknown keys and type mismatches
/// raise ConfigError naming the key.
ScenarioConfig resolve_config(const nlohmann::ordered_json& doc, const std::vector<Override>& overrides = {});

/// Reads and resolves a config file. A missing file raises ConfigError with
/// the message "config not found: <path>". A summary.json written by an
/// export is accepted as well, in which case its embedded config is used.
ScenarioConfig load_config(const std::filesystem::path& path,
                           const std::vector<Override>& overrides = {});

/// The fully resolved configuration. Feeding it back through resolve_config
/// reproduces the same ScenarioConfig.
nlohmann::ordered_json config_to_json(const ScenarioConfig& config);

/// All dotted keys understood by resolve_config, in schema order.
std::vector<std::string> config_keys();

}  // namespace minicar
