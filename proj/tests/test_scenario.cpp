#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vtube/scenario.hpp"

#include <string>

using namespace vtube;
using vtube::testing::source_path;

namespace {

Json minimal() {
  return Json::parse(R"({
    "tube": {
      "segments": [{"kind": "line", "length_m": 20.0}],
      "widths": [{"l_m": 0.0, "r_d_m": 2.0, "r_u_m": 2.0}]
    },
    "params": {"k1_mps": 0.5, "v_max_mps": 1.0, "r_s_m": 0.5, "r_a_m": 0.7, "r_t_m": 0.2},
    "robots": {"positions_m": [[3.0, 0.0], [4.5, 0.0]]},
    "t_end_s": 5.0
  })");
}

std::string rule_of(const Json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ValidationError& e) {
    return e.rule();
  }
  return "";
}

std::string parse_message(const Json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(LoadScenario, NarrowSTube) {
  const Scenario sc = load_scenario(source_path("scenarios/narrow_s_tube.json"));
  EXPECT_EQ(sc.initial.robots.size(), 25u);
  EXPECT_DOUBLE_EQ(sc.params.r_s, 0.5);
  EXPECT_DOUBLE_EQ(sc.dt, 0.01);
  EXPECT_DOUBLE_EQ(sc.t_end, 30.0);
  EXPECT_FALSE(sc.tube->closed());
  EXPECT_NEAR(sc.tube->length(), 30.0, 1e-9);
  bool narrow = false;
  for (double l = 0.0; l <= sc.tube->length(); l += 0.05) narrow = narrow || sc.tube->is_narrow(l, sc.params.r_s);
  EXPECT_TRUE(narrow);
}

TEST(LoadScenario, Annular) {
  const Scenario sc = load_scenario(source_path("scenarios/annular.json"));
  EXPECT_EQ(sc.initial.robots.size(), 10u);
  EXPECT_DOUBLE_EQ(sc.params.r_s, 0.075);
  EXPECT_TRUE(sc.tube->closed());
  EXPECT_DOUBLE_EQ(sc.t_end, 150.0);
}

TEST(LoadScenario, MissingFileIsParseError) {
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ParseError);
}

TEST(ParseScenario, MinimalDocumentFillsDefaults) {
  const Scenario sc = parse_scenario(minimal());
  EXPECT_DOUBLE_EQ(sc.dt, 0.01);
  EXPECT_EQ(sc.mode, "full");
  EXPECT_EQ(sc.resolved["params"]["k2"], 0.1);
  EXPECT_EQ(sc.resolved["params"]["line_approach"], "modified");
  EXPECT_EQ(sc.resolved["density_grid"]["along"], 200);
  EXPECT_NEAR(sc.tube->extension_length(), 20.5, 1e-12);
}

TEST(ParseScenario, CloseRobotsAreInitialCollision) {
  Json doc = minimal();
  doc["robots"]["positions_m"] = Json::parse("[[3.0, 0.0], [3.9, 0.0]]");
  EXPECT_EQ(rule_of(doc), "initial-collision");
}

TEST(ParseScenario, IrregularTubeIsRejected) {
  Json doc = minimal();
  doc["tube"]["segments"] = Json::parse(R"([{"kind": "arc", "radius_m": 2.0, "sweep_rad": -3.0}])");
  doc["tube"]["widths"] = Json::parse(R"([{"l_m": 0.0, "r_d_m": 2.5, "r_u_m": 1.0}])");
  doc["robots"]["positions_m"] = Json::parse("[[1.5, -0.3]]");
  EXPECT_EQ(rule_of(doc), "regularity");
}

TEST(ParseScenario, ThinSectionIsInfeasible) {
  Json doc = minimal();
  doc["tube"]["widths"] = Json::parse(
      R"([{"l_m": 0.0, "r_d_m": 2.0, "r_u_m": 2.0}, {"l_m": 10.0, "r_d_m": 0.4, "r_u_m": 0.4}])");
  EXPECT_EQ(rule_of(doc), "infeasible-narrow-section");
}

TEST(ParseScenario, ParameterBounds) {
  Json doc = minimal();
  doc["params"]["v_max_mps"] = 0.2;
  EXPECT_EQ(rule_of(doc), "param-bound");
  doc = minimal();
  doc["dt_s"] = 0.0;
  EXPECT_EQ(rule_of(doc), "param-bound");
  doc = minimal();
  doc["tube"]["extension_length_m"] = 20.1;
  EXPECT_EQ(rule_of(doc), "param-bound");
}

TEST(ParseScenario, ParseErrorsCarryLocation) {
  Json doc = minimal();
  doc["tube"]["segments"][0]["kind"] = "helix";
  EXPECT_NE(parse_message(doc).find("/tube/segments/0/kind"), std::string::npos);
  doc = minimal();
  doc["tube"]["segments"][0].erase("length_m");
  EXPECT_NE(parse_message(doc).find("/tube/segments/0/length_m"), std::string::npos);
  doc = minimal();
  doc["params"]["r_s_m"] = "half a metre";
  EXPECT_NE(parse_message(doc).find("/params/r_s_m"), std::string::npos);
  doc = minimal();
  doc.erase("robots");
  EXPECT_NE(parse_message(doc).find("/robots"), std::string::npos);
}

TEST(ParseScenario, MalformedJsonReportsPosition) {
  const std::string path = ::testing::TempDir() + "/broken.json";
  {
    std::ofstream out(path);
    out << "{\n  \"tube\": [1, 2,\n}";
  }
  try {
    load_scenario(path);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Fingerprint, StableAndSensitive) {
  const Scenario a = parse_scenario(minimal());
  const Scenario b = parse_scenario(minimal());
  EXPECT_EQ(a.fingerprint, b.fingerprint);
  Json doc = minimal();
  doc["params"]["k2"] = 0.11;
  EXPECT_NE(parse_scenario(doc).fingerprint, a.fingerprint);
  doc = minimal();
  doc["output_dir"] = "elsewhere";
  EXPECT_EQ(parse_scenario(doc).fingerprint, a.fingerprint);
  doc = minimal();
  doc["k2_default_echo"] = true;
  EXPECT_EQ(parse_scenario(doc).fingerprint, a.fingerprint);
  EXPECT_EQ(fingerprint_of(a.resolved), a.fingerprint);
}

TEST(Fingerprint, BundledFileIsStable) {
  const Scenario a = load_scenario(source_path("scenarios/narrow_s_tube.json"));
  const Scenario b = load_scenario(source_path("scenarios/narrow_s_tube.json"));
  EXPECT_EQ(a.fingerprint, b.fingerprint);
  EXPECT_EQ(a.fingerprint.size(), 16u);
}

TEST(GridPlacement, AlignedWithTubeFrame) {
  Json doc = minimal();
  doc["tube"]["heading_rad"] = 0.5;
  doc["robots"] = Json::parse(R"({"grid": {"rows": 2, "cols": 3, "spacing_m": 1.2}})");
  doc["robots"]["grid"]["center_m"] = {5.0 * std::cos(0.5), 5.0 * std::sin(0.5)};
  const Scenario sc = parse_scenario(doc);
  ASSERT_EQ(sc.initial.robots.size(), 6u);
  const Vec2 t(std::cos(0.5), std::sin(0.5));
  const Vec2 d = sc.initial.robots[1].position - sc.initial.robots[0].position;
  EXPECT_NEAR((d - 1.2 * t).norm(), 0.0, 1e-12);
  const Vec2 e = sc.initial.robots[3].position - sc.initial.robots[0].position;
  EXPECT_NEAR((e - 1.2 * rotate_ccw(t)).norm(), 0.0, 1e-12);
}

TEST(GridPlacement, JitterIsSeeded) {
  Json doc = minimal();
  doc["robots"] = Json::parse(R"({"grid": {"rows": 2, "cols": 2, "spacing_m": 1.5, "center_m": [5, 0], "jitter_m": 0.1}})");
  doc["seed"] = 3;
  const Scenario a = parse_scenario(doc);
  const Scenario b = parse_scenario(doc);
  doc["seed"] = 4;
  const Scenario c = parse_scenario(doc);
  EXPECT_EQ(a.initial.robots[0].position, b.initial.robots[0].position);
  EXPECT_NE(a.initial.robots[0].position, c.initial.robots[0].position);
  EXPECT_NE(a.fingerprint, c.fingerprint);
  for (const auto& r : a.initial.robots) {
    const Vec2 nominal(5.0 + ((r.id % 2) ? 0.75 : -0.75), (r.id / 2) ? 0.75 : -0.75);
    EXPECT_LE((r.position - nominal).cwiseAbs().maxCoeff(), 0.1);
  }
}
