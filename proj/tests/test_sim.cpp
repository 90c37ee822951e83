#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vtube/analysis.hpp"
#include "vtube/scenario.hpp"
#include "vtube/sim.hpp"

#include <cmath>

using namespace vtube;
using vtube::testing::arc_tube;
using vtube::testing::source_path;
using vtube::testing::straight_tube;

namespace {

SwarmState swarm_of(const std::vector<Vec2>& positions) {
  SwarmState s;
  for (std::size_t k = 0; k < positions.size(); ++k) {
    RobotState r;
    r.id = static_cast<int>(k);
    r.position = positions[k];
    s.robots.push_back(r);
  }
  return s;
}

ControllerParams params() {
  ControllerParams p;
  p.k1 = 0.5;
  p.v_max = 1.0;
  return p;
}

}  // namespace

TEST(ValidateInitial, ExactContactIsViolation) {
  const auto tube = straight_tube(20.0, 2.0, 2.0);
  EXPECT_FALSE(validate_initial(swarm_of({{5.0, 0.0}, {6.0, 0.0}}), tube, params()).empty());
  EXPECT_TRUE(validate_initial(swarm_of({{5.0, 0.0}, {6.0 + 1e-9, 0.0}}), tube, params()).empty());
}

TEST(ValidateInitial, BoundaryClearance) {
  const auto tube = straight_tube(20.0, 1.0, 1.0);
  EXPECT_TRUE(validate_initial(swarm_of({{5.0, 0.49}}), tube, params()).empty());
  EXPECT_FALSE(validate_initial(swarm_of({{5.0, 0.5}}), tube, params()).empty());
  EXPECT_FALSE(validate_initial(swarm_of({{0.3, 0.0}}), tube, params()).empty());
  EXPECT_FALSE(validate_initial(swarm_of({{5.0, 1.5}}), tube, params()).empty());
}

TEST(ValidateInitial, ReferenceGridIsAdmissible) {
  const Scenario sc = load_scenario(source_path("scenarios/narrow_s_tube.json"));
  EXPECT_EQ(sc.initial.robots.size(), 25u);
  EXPECT_TRUE(validate_initial(sc.initial, *sc.tube, sc.params).empty());
}

TEST(Step, SingleRobotAdvancesAlongTangent) {
  const auto tube = straight_tube(20.0, 2.0, 2.0);
  Simulator sim(tube, params(), SimulationSettings{ControlMode::full, 0.01, 1.0});
  SwarmState s = swarm_of({{5.0, 0.0}});
  for (int k = 1; k <= 10; ++k) {
    s = sim.step(s, 0.01);
    EXPECT_NEAR(s.robots[0].position.x(), 5.0 + 0.005 * k, 1e-9);
    EXPECT_NEAR(s.robots[0].position.y(), 0.0, 1e-9);
  }
}

TEST(Step, ZeroStepLeavesPositionsUnchanged) {
  const auto tube = straight_tube(20.0, 2.0, 2.0);
  Simulator sim(tube, params(), SimulationSettings{});
  const SwarmState s = swarm_of({{5.0, 0.0}, {6.2, 0.3}});
  const SwarmState t = sim.step(s, 0.0);
  for (std::size_t k = 0; k < s.robots.size(); ++k) EXPECT_EQ(s.robots[k].position, t.robots[k].position);
}

TEST(ExitRule, TerminalSectionBoundary) {
  const auto tube = straight_tube(10.0, 1.0, 1.0);
  Simulator sim(tube, params(), SimulationSettings{});
  SwarmState s = swarm_of({{10.0, 0.0}, {10.0 - 1e-6, 0.2}});
  s.time = 3.0;
  const SwarmState t = sim.apply_exit_rule(s);
  EXPECT_FALSE(t.robots[0].active);
  EXPECT_EQ(t.robots[0].exit_time, 3.0);
  EXPECT_TRUE(t.robots[1].active);
}

TEST(ExitRule, ClosedTubeNeverExits) {
  VirtualTube ring(GeneratingCurve(Vec2(1.0, 0.0), kPi / 2.0, {ArcSpec{1.0, kTwoPi}}),
                   WidthProfile::constant(0.4, 0.4), Topology::closed);
  auto p = params();
  p.r_s = 0.1;
  p.r_a = 0.15;
  p.r_t = 0.05;
  p.k1 = 0.2;
  p.v_max = 0.3;
  Simulator sim(ring, p, SimulationSettings{ControlMode::full, 0.01, 40.0});
  const auto log = sim.run(swarm_of({{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}}));
  EXPECT_EQ(log.termination, Termination::time_limit);
  EXPECT_EQ(log.records.back().metrics.exited_count, 0);
}

TEST(Run, ZeroDurationGivesSingleRecord) {
  const auto tube = straight_tube(20.0, 2.0, 2.0);
  Simulator sim(tube, params(), SimulationSettings{ControlMode::full, 0.01, 0.0});
  const auto log = sim.run(swarm_of({{5.0, 0.0}, {6.5, 0.0}}));
  ASSERT_EQ(log.records.size(), 1u);
  EXPECT_EQ(log.records[0].time, 0.0);
  EXPECT_EQ(log.termination, Termination::time_limit);
}

TEST(Run, RecordCountAndTimes) {
  const auto tube = straight_tube(40.0, 2.0, 2.0);
  Simulator sim(tube, params(), SimulationSettings{ControlMode::full, 0.01, 3.0});
  const auto log = sim.run(swarm_of({{5.0, 0.0}, {6.5, 0.0}}));
  ASSERT_EQ(log.records.size(), 301u);
  EXPECT_EQ(log.records[150].time, 1.5);
  EXPECT_EQ(log.steps, 300u);
}

TEST(Run, AllExitedTerminatesEarly) {
  const auto tube = straight_tube(3.0, 2.0, 2.0);
  Simulator sim(tube, params(), SimulationSettings{ControlMode::full, 0.01, 30.0});
  const auto log = sim.run(swarm_of({{1.0, 0.0}}));
  EXPECT_EQ(log.termination, Termination::all_exited);
  EXPECT_EQ(throughput(log, log.records.back().time), 1);
  EXPECT_LT(log.records.back().time, 30.0);
}

TEST(Run, LeavingTheTubeIsAFault) {
  const auto tube = arc_tube(3.0, kPi, 1.0, 1.0);
  Simulator sim(tube, params(), SimulationSettings{ControlMode::baseline, 6.0, 12.0});
  const auto log = sim.run(swarm_of({{3.0, 1.0}}));
  EXPECT_EQ(log.termination, Termination::fault);
  EXPECT_FALSE(log.fault.empty());
  EXPECT_EQ(log.records.size(), 2u);
}

TEST(Run, DeterministicAcrossRuns) {
  Scenario sc = load_scenario(source_path("scenarios/narrow_s_tube.json"));
  sc.t_end = 1.0;
  Simulator sim(*sc.tube, sc.params, sc.settings(ControlMode::full));
  const auto a = sim.run(sc.initial, sc.fingerprint);
  const auto b = sim.run(sc.initial, sc.fingerprint);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.back().robots.size(); ++k) {
    EXPECT_EQ(a.records.back().robots[k].position, b.records.back().robots[k].position);
  }
}

TEST(Run, ZeroAlphaFullMatchesBaseline) {
  Scenario sc = load_scenario(source_path("scenarios/narrow_s_tube.json"));
  sc.t_end = 1.0;
  sc.params.alpha0 = 0.0;
  const auto a = Simulator(*sc.tube, sc.params, sc.settings(ControlMode::full)).run(sc.initial);
  const auto b = Simulator(*sc.tube, sc.params, sc.settings(ControlMode::baseline)).run(sc.initial);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    for (std::size_t i = 0; i < a.records[k].robots.size(); ++i) {
      ASSERT_EQ(a.records[k].robots[i].position, b.records[k].robots[i].position);
      ASSERT_EQ(a.records[k].robots[i].velocity, b.records[k].robots[i].velocity);
    }
  }
}

TEST(Run, FullModeCommandsWithinLimits) {
  Scenario sc = load_scenario(source_path("scenarios/narrow_s_tube.json"));
  sc.t_end = 3.0;
  const auto log = Simulator(*sc.tube, sc.params, sc.settings(ControlMode::full)).run(sc.initial);
  EXPECT_EQ(log.termination, Termination::time_limit);
  EXPECT_TRUE(audit_condition23(log).ok());
  for (const auto& rec : log.records) {
    EXPECT_LE(rec.metrics.max_command_norm, sc.params.v_max * (1.0 + 1e-15));
    EXPECT_GT(rec.metrics.min_pairwise_distance, 2.0 * sc.params.r_s);
    EXPECT_GT(rec.metrics.min_boundary_distance, sc.params.r_s);
  }
}
