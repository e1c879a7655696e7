#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "minicar/config_io.hpp"

using namespace minicar;
using Json = nlohmann::ordered_json;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "minicar_config_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << text;
  return path;
}

std::string error_of(const Json& doc, const std::vector<Override>& ov = {}) {
  try {
    resolve_config(doc, ov);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsResolveToTheNormalPreset) {
  const ScenarioConfig c = resolve_config(Json::object());
  EXPECT_EQ(c.fleet.count, 16);
  EXPECT_DOUBLE_EQ(c.idm.alpha, 0.5);
  EXPECT_DOUBLE_EQ(c.mobil.b_safe, 0.35);
  EXPECT_DOUBLE_EQ(c.tracker.l1, c.vehicle.wheelbase);
  EXPECT_DOUBLE_EQ(c.tracker.l2, 2.3 * c.vehicle.wheelbase);
  EXPECT_DOUBLE_EQ(c.coop.kappa_u, 0.5);
  EXPECT_FALSE(c.mobil.cooperative);
}

TEST(Config, AggressivePresetAndPolicy) {
  const ScenarioConfig c = resolve_config(
      Json::parse(R"({"fleet": {"preset": "aggressive", "policy": "cooperative"}})"));
  EXPECT_DOUBLE_EQ(c.idm.alpha, 1.0);
  EXPECT_DOUBLE_EQ(c.idm.beta, 0.5);
  EXPECT_DOUBLE_EQ(c.mobil.politeness, 1.0);
  EXPECT_DOUBLE_EQ(c.mobil.delta_a_threshold, 0.2);
  EXPECT_DOUBLE_EQ(c.mobil.b_safe, 0.7);
  EXPECT_TRUE(c.mobil.cooperative);
}

TEST(Config, DocumentKeysBeatPresetsAndOverridesBeatDocuments) {
  const Json doc = Json::parse(R"({"fleet": {"preset": "aggressive"}, "idm": {"alpha": 0.8}})");
  const ScenarioConfig c = resolve_config(doc, {{"idm.alpha", "0.9"}, {"name", "hello world"}});
  EXPECT_DOUBLE_EQ(c.idm.alpha, 0.9);
  EXPECT_DOUBLE_EQ(c.idm.beta, 0.5);
  EXPECT_EQ(c.name, "hello world");
  // b_safe follows the final alpha unless set explicitly.
  EXPECT_DOUBLE_EQ(c.mobil.b_safe, 0.7 * 0.9);
}

TEST(Config, DegreeKeysAreConverted) {
  const ScenarioConfig c = resolve_config(Json::parse(R"({"vehicle": {"max_steer_deg": 18}})"));
  EXPECT_NEAR(c.vehicle.max_steer, M_PI / 10, 1e-15);
  EXPECT_NE(error_of(Json::parse(R"({"vehicle": {"max_steer_deg": 18, "max_steer": 0.3}})")), "");
  EXPECT_NE(error_of(Json::parse(R"({"idm": {"v0_deg": 3}})")).find("idm.v0_deg"), std::string::npos);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(error_of(Json::parse(R"({"idm": {"bogus": 1}})")).find("idm.bogus"), std::string::npos);
  EXPECT_NE(error_of(Json::parse(R"({"idm": {"v0": "fast"}})")).find("idm.v0"), std::string::npos);
  EXPECT_NE(error_of(Json::parse(R"({"fleet": {"policy": "selfish"}})")).find("fleet.policy"),
            std::string::npos);
  EXPECT_NE(error_of(Json::parse(R"({"fleet": {"preset": "sleepy"}})")).find("fleet.preset"),
            std::string::npos);
  EXPECT_NE(error_of(Json::object(), {{"idm.nope", "1"}}).find("idm.nope"), std::string::npos);
  EXPECT_NE(error_of(Json::array()), "");
}

TEST(Config, OverrideParsing) {
  EXPECT_EQ(parse_override("idm.v0=0.5"), (Override{"idm.v0", "0.5"}));
  EXPECT_EQ(parse_override("name=a=b"), (Override{"name", "a=b"}));
  EXPECT_THROW(parse_override("idm.v0"), ConfigError);
  EXPECT_THROW(parse_override("=3"), ConfigError);
}

TEST(Config, ResolvedConfigRoundTrips) {
  const Json doc = Json::parse(R"({
    "name": "rt", "seed": 9, "fleet": {"preset": "aggressive", "policy": "cooperative", "gamified": [0, 3]},
    "events": [{"t": 5.0, "type": "stop", "vehicle": 2}],
    "vehicle": {"preset": "measured"}
  })");
  const ScenarioConfig a = resolve_config(doc);
  const Json echo = config_to_json(a);
  const ScenarioConfig b = resolve_config(echo);
  EXPECT_EQ(config_to_json(b).dump(), echo.dump());
  EXPECT_EQ(b.fleet.gamified, (std::vector<int>{0, 3}));
  EXPECT_DOUBLE_EQ(b.vehicle.max_steer_rate, 0.076);
  ASSERT_EQ(b.events.size(), 1u);
  EXPECT_EQ(b.events[0].vehicle, 2);
}

TEST(Config, EveryKeyAppearsInTheEcho) {
  const Json echo = config_to_json(resolve_config(Json::object()));
  for (const auto& key : config_keys()) {
    const Json* node = &echo;
    std::string rest = key;
    for (auto dot = rest.find('.'); dot != std::string::npos; dot = rest.find('.')) {
      ASSERT_TRUE(node->contains(rest.substr(0, dot))) << key;
      node = &(*node)[rest.substr(0, dot)];
      rest = rest.substr(dot + 1);
    }
    EXPECT_TRUE(node->contains(rest)) << key;
  }
}

TEST(Config, LoadReportsMissingFiles) {
  try {
    load_config("/nonexistent/missing.file");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()), "config not found: /nonexistent/missing.file");
  }
}

TEST(Config, LoadAcceptsCommentsAndSummaries) {
  const auto plain = temp_file("plain.json", "{\n  // a comment\n  \"seed\": 4\n}\n");
  EXPECT_EQ(load_config(plain).seed, 4u);

  Json summary = Json::object();
  summary["name"] = "x";
  summary["throughput"] = Json::object();
  summary["config"] = config_to_json(resolve_config(Json::parse(R"({"seed": 12, "idm": {"v0": 0.5}})")));
  const auto path = temp_file("summary.json", summary.dump(2));
  const ScenarioConfig c = load_config(path);
  EXPECT_EQ(c.seed, 12u);
  EXPECT_DOUBLE_EQ(c.idm.v0, 0.5);

  const auto broken = temp_file("broken.json", "{ nope");
  EXPECT_THROW(load_config(broken), ConfigError);
}

TEST(Config, ValidationRejectsBadScenarios) {
  EXPECT_NE(error_of(Json::parse(R"({"dt": 0})")), "");
  EXPECT_NE(error_of(Json::parse(R"({"fleet": {"count": 0}})")), "");
  EXPECT_NE(error_of(Json::parse(R"({"fleet": {"gamified": [40]}})")), "");
  EXPECT_NE(error_of(Json::parse(R"({"events": [{"t": 1, "type": "explode", "vehicle": 0}]})")), "");
  EXPECT_NE(error_of(Json::parse(R"({"duration": -1})")), "");
}
