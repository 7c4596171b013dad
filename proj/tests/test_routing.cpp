// Copyright 2026 The Boomarm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "boomarm/errors.hpp"
#include "boomarm/kinematics.hpp"
#include "boomarm/routing.hpp"

namespace boomarm {
namespace {

constexpr double kPi = std::numbers::pi;

RigidTransform random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec3 axis = Vec3(u(rng), u(rng), u(rng)).normalized();
  return {exp_so3(axis * (kPi * 0.5 * (u(rng) + 1.0))), Vec3(u(rng), u(rng), u(rng))};
}

double max_deviation(const TaskTrajectory& a, const TaskTrajectory& b) {
  EXPECT_EQ(a.samples.size(), b.samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(a.samples.size(), b.samples.size()); ++i) {
    worst = std::max(worst, (a.samples[i].p - b.samples[i].p).norm());
    worst = std::max(worst, std::abs(a.samples[i].t - b.samples[i].t));
  }
  return worst;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("boomarm_routing_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Yaw of hook index i in a four-hook scenario: 0.3 rad steps centred on zero.
double hook_yaw(std::size_t i) { return 0.3 * (static_cast<double>(i) - 1.5); }

RoutingSession session_at_hook(std::size_t index, std::uint64_t seed = 0) {
  const PlantParams params;
  const MotionPrimitive prim = default_spiral_primitive();
  ScenarioConfig cfg = default_scenario(prim, params);
  const Hook& h = cfg.hooks[index];
  cfg.start = hook_configuration(hook_yaw(index), h.theta2_nominal_deg, h.d3_nominal);
  return RoutingSession(cfg, prim, params, ServoGains{}, seed);
}

TEST(RecordPrimitive, DemoInHookFrameIsStoredVerbatim) {
  std::vector<TrajectorySample> demo;
  for (int i = 0; i <= 50; ++i) demo.push_back({0.01 * i, Vec3(0.002 * i, 0.001 * i, 0.0), std::nullopt});
  const MotionPrimitive prim = record_primitive(demo, RigidTransform{}, 0.01);
  ASSERT_EQ(prim.samples.samples.size(), demo.size());
  for (std::size_t i = 0; i < demo.size(); ++i) {
    EXPECT_NEAR(prim.samples.samples[i].t, demo[i].t, 1e-12);
    EXPECT_LT((prim.samples.samples[i].p - demo[i].p).norm(), 1e-12);
  }
  EXPECT_NEAR(prim.nominal_speed, 1000.0 * std::sqrt(0.002 * 0.002 + 0.001 * 0.001) / 0.01, 1e-9);
}

TEST(RecordPrimitive, IsInvariantToTheDemoFrame) {
  std::vector<PrimitiveStage> stages;
  const auto local = spiral_hook_demo(0.03, 0.01, RigidTransform{}, &stages);
  const MotionPrimitive ref = record_primitive(local, RigidTransform{}, 0.01);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const RigidTransform g = random_pose(rng);
    const auto world = spiral_hook_demo(0.03, 0.01, g);
    const MotionPrimitive prim = record_primitive(world, g, 0.01);
    EXPECT_LT(max_deviation(prim.samples, ref.samples), 1e-9);
  }
}

TEST(RecordPrimitive, SpiralRoundTripsThroughRecordAndReplay) {
  std::mt19937_64 rng(11);
  const MotionPrimitive prim = default_spiral_primitive();
  for (int trial = 0; trial < 5; ++trial) {
    const RigidTransform hook = random_pose(rng);
    const auto demo = spiral_hook_demo(0.03, 0.01, hook);
    const TaskTrajectory replay = replay_primitive_at_hook(prim, hook, prim.nominal_speed);
    ASSERT_EQ(replay.samples.size(), demo.size());
    for (std::size_t i = 0; i < demo.size(); ++i) {
      EXPECT_LT((replay.samples[i].p - demo[i].p).norm(), 1e-9);
      EXPECT_NEAR(replay.samples[i].t, demo[i].t, 1e-9);
    }
  }
}

TEST(RecordPrimitive, SpiralHasFourStagesWithinTheHookNeighbourhood) {
  const MotionPrimitive prim = default_spiral_primitive();
  EXPECT_NO_THROW(prim.validate());
  ASSERT_EQ(prim.stages.size(), 4u);
  EXPECT_EQ(prim.stages[0].name, "approach");
  EXPECT_EQ(prim.stages[3].name, "retreat");
  for (std::size_t i = 1; i < prim.stages.size(); ++i) EXPECT_GT(prim.stages[i].t_end, prim.stages[i - 1].t_end);
  EXPECT_NEAR(prim.stages.back().t_end, prim.samples.end_time(), 1e-9);
  // Chords of the sampled helix are a hair shorter than its arcs.
  EXPECT_NEAR(prim.nominal_speed, 30.0, 0.01);
}

TEST(RecordPrimitive, RejectsDegenerateDemos) {
  const std::vector<TrajectorySample> one{{0.0, Vec3::Zero(), std::nullopt}};
  EXPECT_THROW(record_primitive(one, RigidTransform{}, 0.01), InvalidArgument);
  const std::vector<TrajectorySample> still{{0.0, Vec3(0.1, 0, 0), std::nullopt}, {1.0, Vec3(0.1, 0, 0), std::nullopt}};
  EXPECT_THROW(record_primitive(still, RigidTransform{}, 0.01), InvalidArgument);
  const std::vector<TrajectorySample> backwards{{1.0, Vec3::Zero(), std::nullopt}, {0.0, Vec3(0.1, 0, 0), std::nullopt}};
  EXPECT_THROW(record_primitive(backwards, RigidTransform{}, 0.01), InvalidArgument);
}

TEST(ReplayPrimitive, IdentityPoseAtNominalSpeedIsUnchanged) {
  const MotionPrimitive prim = default_spiral_primitive();
  const TaskTrajectory replay = replay_primitive_at_hook(prim, RigidTransform{}, prim.nominal_speed);
  EXPECT_LT(max_deviation(replay, prim.samples), 1e-12);
}

TEST(ReplayPrimitive, RotationIsAppliedPointwise) {
  const MotionPrimitive prim = default_spiral_primitive();
  const RigidTransform hook(rot_z(kPi / 2), Vec3(1.0, -0.5, 2.0));
  const TaskTrajectory replay = replay_primitive_at_hook(prim, hook, prim.nominal_speed);
  ASSERT_EQ(replay.samples.size(), prim.samples.samples.size());
  for (std::size_t i = 0; i < replay.samples.size(); ++i) {
    const Vec3& p = prim.samples.samples[i].p;
    const Vec3 expected(1.0 - p.y(), -0.5 + p.x(), 2.0 + p.z());  // written out by hand
    EXPECT_LT((replay.samples[i].p - expected).norm(), 1e-12);
  }
}

TEST(ReplayPrimitive, HalfSpeedDoublesTheDuration) {
  const MotionPrimitive prim = default_spiral_primitive();
  const TaskTrajectory full = replay_primitive_at_hook(prim, RigidTransform{}, 40.0);
  const TaskTrajectory half = replay_primitive_at_hook(prim, RigidTransform{}, 20.0);
  EXPECT_DOUBLE_EQ(half.duration(), 2.0 * full.duration());
  EXPECT_NEAR(full.speed, 0.040, 1e-12);
  EXPECT_THROW(replay_primitive_at_hook(prim, RigidTransform{}, 0.0), InvalidArgument);
}

TEST(ReplayPrimitive, FrameInvariance) {
  const MotionPrimitive prim = default_spiral_primitive();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const RigidTransform g = random_pose(rng);
    const RigidTransform h = random_pose(rng);
    const TaskTrajectory moved = replay_primitive_at_hook(prim, g * h, 50.0);
    TaskTrajectory expected = replay_primitive_at_hook(prim, h, 50.0);
    for (auto& s : expected.samples) s.p = g.apply(s.p);
    EXPECT_LT(max_deviation(moved, expected), 1e-9);
  }
}

TEST(RoutingError, IdenticalPathIsZero) {
  const TaskTrajectory ref = default_spiral_primitive().samples;
  EXPECT_NEAR(measure_routing_error(discretize_reference(ref), ref), 0.0, 1e-12);
  // Denser samples of the same path sit between goals, at most half a goal spacing away.
  std::vector<Vec3> dense;
  for (const auto& s : ref.samples) dense.push_back(s.p);
  EXPECT_LE(measure_routing_error(dense, ref), 1000.0 * kDefaultGoalSpacing / 2 + 1e-9);
}

TEST(RoutingError, UniformOffsetIsReportedInMillimetres) {
  // Every goal of the reference gets one executed point 10 mm away.
  const TaskTrajectory ref = default_spiral_primitive().samples;
  const auto goals = discretize_reference(ref);
  std::vector<Vec3> executed;
  for (const Vec3& g : goals) executed.push_back(g + Vec3(0, 0, 0.010));
  EXPECT_NEAR(measure_routing_error(executed, ref), 10.0, 1e-9);

  // A dense straight path offset sideways: 10 mm up to half a goal spacing along track.
  TaskTrajectory line;
  line.speed = 0.03;
  for (int i = 0; i <= 300; ++i) line.samples.push_back({0.01 * i, Vec3(0.0003 * i, 0, 0), std::nullopt});
  std::vector<Vec3> dense;
  for (int i = 0; i <= 300; ++i) dense.push_back(Vec3(0.0003 * i, 0.010, 0));
  const double e = measure_routing_error(dense, line);
  EXPECT_GE(e, 10.0 - 1e-9);
  EXPECT_LE(e, std::hypot(10.0, 1.0) + 1e-9);
}

TEST(Scenario, DefaultHooksFollowTheReferenceRows) {
  const PlantParams params;
  const MotionPrimitive prim = default_spiral_primitive();
  const ScenarioConfig cfg = default_scenario(prim, params);
  ASSERT_EQ(cfg.hooks.size(), 4u);
  const double rows[4][2] = {{35, 1.27}, {24, 1.78}, {13, 1.07}, {31, 1.55}};
  for (std::size_t i = 0; i < 4; ++i) {
    const Hook& h = cfg.hooks[i];
    EXPECT_EQ(h.id, static_cast<int>(i) + 1);
    EXPECT_EQ(h.theta2_nominal_deg, rows[i][0]);
    EXPECT_EQ(h.d3_nominal, rows[i][1]);
    // The primitive starts exactly at the gripper of the hook configuration.
    const RigidTransform fk = corrected_forward_kinematics(
        hook_configuration(hook_yaw(i), rows[i][0], rows[i][1]), params.geometry, params.deflection);
    EXPECT_LT((h.pose.apply(prim.samples.samples.front().p) - fk.translation).norm(), 1e-12);
    EXPECT_NO_THROW(h.validate(params.geometry));
  }
  EXPECT_DOUBLE_EQ(cfg.ebar_mm, 15.0);
  EXPECT_DOUBLE_EQ(cfg.trigger_radius, 0.3);
}

TEST(Scenario, JsonRoundTrip) {
  const PlantParams params;
  const MotionPrimitive prim = default_spiral_primitive();
  ScenarioConfig cfg = default_scenario(prim, params);
  cfg.ebar_mm = 12.5;
  const auto dir = temp_dir("scenario");
  save_scenario(cfg, dir / "scenario.json");
  const ScenarioConfig back = load_scenario(dir / "scenario.json");
  EXPECT_DOUBLE_EQ(back.ebar_mm, 12.5);
  EXPECT_EQ(back.primitive_name, cfg.primitive_name);
  EXPECT_LT((back.start.vector() - cfg.start.vector()).norm(), 1e-15);
  ASSERT_EQ(back.hooks.size(), cfg.hooks.size());
  for (std::size_t i = 0; i < cfg.hooks.size(); ++i) {
    const Hook& a = back.hooks[i];
    const Hook& b = cfg.hooks[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.theta2_nominal_deg, b.theta2_nominal_deg);
    EXPECT_EQ(a.d3_nominal, b.d3_nominal);
    EXPECT_LT((a.pose.translation - b.pose.translation).norm(), 1e-12);
    EXPECT_LT((a.pose.rotation - b.pose.rotation).norm(), 1e-12);
    EXPECT_LT((a.approach.rotation - b.approach.rotation).norm(), 1e-12);
  }
}

TEST(Scenario, RejectsBadFiles) {
  EXPECT_THROW(scenario_from_json(nlohmann::json::array()), FormatError);
  EXPECT_THROW(scenario_from_json({{"ebar_mm", 15}}), FormatError);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), FormatError);
}

TEST(PrimitiveLibrary, RoundTripsWithinTolerance) {
  std::vector<TrajectorySample> demo;
  for (int i = 0; i <= 40; ++i) {
    const double a = 0.05 * i;
    demo.push_back({0.02 * i, Vec3(0.1 * std::cos(a), 0.1 * std::sin(a), 0.001 * i),
                    Quat(Eigen::AngleAxisd(a, Vec3::UnitZ()))});
  }
  const MotionPrimitive oriented = record_primitive(demo, RigidTransform{}, 0.02, "turn");
  const std::vector<MotionPrimitive> lib{default_spiral_primitive(), oriented};
  const auto dir = temp_dir("library");
  save_primitive_library(lib, dir / "primitives.json");
  const auto back = load_primitive_library(dir / "primitives.json");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t n = 0; n < 2; ++n) {
    EXPECT_EQ(back[n].name, lib[n].name);
    EXPECT_NEAR(back[n].nominal_speed, lib[n].nominal_speed, 1e-9);
    EXPECT_EQ(back[n].stages.size(), lib[n].stages.size());
    EXPECT_LT(max_deviation(back[n].samples, lib[n].samples), 1e-9);
  }
  ASSERT_TRUE(back[1].samples.samples[10].orientation);
  EXPECT_LT(back[1].samples.samples[10].orientation->angularDistance(*lib[1].samples.samples[10].orientation), 1e-9);
}

TEST(ModeMachine, TriggerAtHookOneStartsThePrimitive) {
  RoutingSession s = session_at_hook(0);
  EXPECT_EQ(s.state().mode, Mode::kTeleop);
  const TriggerResult r = s.trigger(1);
  EXPECT_TRUE(r.accepted) << r.reason;
  EXPECT_EQ(s.state().mode, Mode::kPrimitive);
  ASSERT_TRUE(s.state().active_hook);
  EXPECT_EQ(s.hooks()[static_cast<std::size_t>(*s.state().active_hook)].id, 1);
  ASSERT_NE(s.active_reference(), nullptr);
  EXPECT_EQ(s.state().events.back().event, "primitive_start");
}

TEST(ModeMachine, RejectsTriggersWithAReason) {
  RoutingSession far(default_scenario(default_spiral_primitive(), PlantParams{}), default_spiral_primitive(),
                     PlantParams{}, ServoGains{}, 0);
  const TriggerResult r = far.trigger(1);
  EXPECT_FALSE(r.accepted);
  EXPECT_NE(r.reason.find("from the hook"), std::string::npos);
  EXPECT_EQ(far.state().mode, Mode::kTeleop);
  EXPECT_EQ(far.state().events.back().event, "trigger_rejected");

  EXPECT_FALSE(far.trigger(99).accepted);

  RoutingSession out_of_order = session_at_hook(1);
  const TriggerResult second = out_of_order.trigger(2);
  EXPECT_FALSE(second.accepted);
  EXPECT_NE(second.reason.find("hook 1 is next"), std::string::npos);

  RoutingSession busy = session_at_hook(0);
  ASSERT_TRUE(busy.trigger(1).accepted);
  const TriggerResult again = busy.trigger(1);
  EXPECT_FALSE(again.accepted);
  EXPECT_EQ(busy.state().mode, Mode::kPrimitive);
}

TEST(ModeMachine, ZeroTeleopKeepsTheArmStill) {
  RoutingSession s = session_at_hook(2);
  const Vec3 before = s.tool_pose().translation;
  const JointConfig q0 = s.plant().q;
  for (int n = 0; n < 200; ++n) s.tick();
  EXPECT_LT((s.plant().q.vector() - q0.vector()).norm(), 1e-12);
  // Only the boom vibration may move the tool.
  EXPECT_LT((s.tool_pose().translation - before).norm(), 0.005);
  EXPECT_EQ(s.state().mode, Mode::kTeleop);
}

TEST(ModeMachine, NoPrimitiveWithoutATrigger) {
  RoutingSession s = session_at_hook(0);
  s.set_teleop({Vec3(0.05, 0, 0), Vec3::Zero()});
  for (int n = 0; n < 300; ++n) {
    s.tick();
    ASSERT_EQ(s.state().mode, Mode::kTeleop);
  }
}

TEST(ModeMachine, CompletesEachHookOnceAndEndsDone) {
  const PlantParams params;
  const MotionPrimitive prim = default_spiral_primitive();
  const ScenarioConfig cfg = default_scenario(prim, params);
  RoutingSession s(cfg, prim, params, ServoGains{}, 1);
  ScriptedOperator op;
  std::set<int> seen;
  while (s.state().mode != Mode::kDone && s.plant().t < 600.0) {
    op.act(s);
    s.tick();
    if (s.state().mode == Mode::kPrimitive) ASSERT_TRUE(s.state().active_hook);
    if (s.state().mode != Mode::kDone) ASSERT_LT(s.state().hooks_completed.size(), cfg.hooks.size());
  }
  ASSERT_EQ(s.state().mode, Mode::kDone);
  EXPECT_EQ(s.state().hooks_completed, (std::vector<int>{1, 2, 3, 4}));
  for (const auto& h : s.hooks()) {
    ASSERT_TRUE(h.e_meas);
    EXPECT_GE(*h.e_meas, 0.0);
  }
  // Completed hooks cannot run again.
  EXPECT_FALSE(s.trigger(1).accepted);
  EXPECT_EQ(s.state().hooks_completed.size(), 4u);
  EXPECT_EQ(s.state().events.back().event, "trigger_rejected");

  std::ostringstream log;
  s.write_event_log(log);
  std::istringstream lines(log.str());
  std::string line;
  int starts = 0, completes = 0, done = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    ASSERT_TRUE(j.contains("t") && j.contains("event") && j.contains("hook") && j.contains("e_meas"));
    const auto ev = j["event"].get<std::string>();
    starts += ev == "primitive_start";
    completes += ev == "primitive_complete";
    done += ev == "scenario_done";
    if (ev == "primitive_complete") EXPECT_TRUE(j["e_meas"].is_number());
  }
  EXPECT_EQ(starts, 4);
  EXPECT_EQ(completes, 4);
  EXPECT_EQ(done, 1);
}

TEST(HookSpeeds, AssignedFromTheGrid) {
  ErrorGrid g = ErrorGrid::with_axes({0, 45, 90}, {0.6, 0.9, 1.2, 1.5, 1.8}, {17, 33, 50, 67, 80});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t k = 0; k < 5; ++k) g.at(i, j, k) = g.speed_mm_s[k] / 4.0;
  auto hooks = default_scenario(default_spiral_primitive(), PlantParams{}).hooks;
  assign_hook_speeds(hooks, g, 15.0);
  for (const auto& h : hooks) {
    EXPECT_NEAR(h.s_star, 60.0, 0.5);
    EXPECT_LE(h.e_pred, 15.0);
  }
}

}  // namespace
}  // namespace boomarm
