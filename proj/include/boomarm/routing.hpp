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

#pragma once

// Semi-autonomous cable routing: hooks, motion primitives stored in a hook
// frame and replayed at other hooks, and the TELEOP / PRIMITIVE mode machine
// that hands the arm between a human operator and the servo loop.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "boomarm/errormodel.hpp"
#include "boomarm/plant.hpp"
#include "boomarm/servo.hpp"

namespace boomarm {

struct Hook {
  int id = 0;
  RigidTransform pose;  // world; the primitive is replayed in this frame
  RigidTransform approach;  // world tool pose at the primitive start
  double theta2_nominal_deg = 0.0;
  double d3_nominal = 0.0;  // m
  double s_star = 0.0;      // mm/s
  double e_pred = 0.0;      // mm
  std::optional<double> e_meas;

  void validate(const RobotGeometry& geom) const;
};

struct PrimitiveStage {
  std::string name;
  double t_end = 0.0;  // s, in primitive time
};

struct MotionPrimitive {
  std::string name;
  TaskTrajectory samples;  // hook-local frame, time starts at 0
  double nominal_speed = 0.0;  // mm/s
  std::vector<PrimitiveStage> stages;

  inline static constexpr double kMaxExtent = 0.5;  // m from the hook origin

  void validate() const;
};

/// Resamples a demonstration every resample_dt and expresses it in the
/// demonstration hook frame. Nominal speed is path length over duration.
MotionPrimitive record_primitive(const std::vector<TrajectorySample>& demo, const RigidTransform& demo_hook_frame,
                                 double resample_dt, std::string name = "demo");

/// World-frame trajectory of the primitive at `hook_pose`, time-scaled so the
/// path speed is `speed_mm_s`, starting at t = 0.
TaskTrajectory replay_primitive_at_hook(const MotionPrimitive& prim, const RigidTransform& hook_pose,
                                        double speed_mm_s);

/// Four-stage spiral hook motion around a post on the local z axis:
/// approach, wrap-in, one full wrap-around and retreat. Constant path speed,
/// sampled every dt in `frame`.
std::vector<TrajectorySample> spiral_hook_demo(double speed_m_s, double dt,
                                               const RigidTransform& frame = RigidTransform{},
                                               std::vector<PrimitiveStage>* stages = nullptr);

/// The spiral demo recorded at 30 mm/s and dt = 0.01 s.
MotionPrimitive default_spiral_primitive();

nlohmann::json primitive_to_json(const MotionPrimitive& prim);
MotionPrimitive primitive_from_json(const nlohmann::json& j);
/// Library file `{"primitives": [...]}`.
void save_primitive_library(const std::vector<MotionPrimitive>& prims, const std::filesystem::path& path);
std::vector<MotionPrimitive> load_primitive_library(const std::filesystem::path& path);

/// p95 task error (mm) of an executed tool path against the reference.
double measure_routing_error(const std::vector<Vec3>& executed, const TaskTrajectory& reference);

struct ScenarioConfig {
  std::vector<Hook> hooks;  // completed in this order
  double ebar_mm = 15.0;
  double trigger_radius = 0.3;  // m, tool to hook origin
  double settle_time = 0.5;     // s tracked after the primitive ends
  JointConfig start{0.0, 0.4, 1.0, 0.0, 0.5, 0.0};
  std::filesystem::path primitive_file;  // empty: built-in spiral
  std::string primitive_name = "spiral_hook";

  void validate(const RobotGeometry& geom) const;
};

/// Configuration of the arm at a hook: yaw, nominal pitch and extension, wrist (0, 0.5, 0).
JointConfig hook_configuration(double theta1, double theta2_deg, double d3);

/// Four hooks at the given (pitch deg, length m) rows, spread in yaw, each
/// placed so the primitive starts at the gripper of the hook's configuration.
ScenarioConfig make_scenario(const std::vector<std::pair<double, double>>& rows, const MotionPrimitive& prim,
                             const PlantParams& params);
/// The four hooks of the reference routing experiment.
ScenarioConfig default_scenario(const MotionPrimitive& prim, const PlantParams& params);

nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
/// Relative primitive paths resolve against `base_dir`.
ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);
void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path);

/// The scenario's primitive: `primitive_name` from `primitive_file`, or the
/// built-in spiral when no file is given. Throws FormatError if the name is missing.
MotionPrimitive scenario_primitive(const ScenarioConfig& cfg);

/// Fills s_star and e_pred of every hook from the grid. A hook with no feasible
/// speed gets the lowest-error speed and a warning.
void assign_hook_speeds(std::vector<Hook>& hooks, const ErrorGrid& grid, double ebar_mm);

enum class Mode { kTeleop, kPrimitive, kDone };
const char* mode_name(Mode m);

struct RoutingEvent {
  double t = 0.0;
  std::string event;
  std::optional<int> hook;
  std::optional<double> e_meas;
  std::string reason;
};

struct ScenarioState {
  Mode mode = Mode::kTeleop;
  std::optional<int> active_hook;  // index into the hook list
  std::vector<int> hooks_completed;  // hook ids, completion order
  double primitive_progress = 0.0;  // s since the primitive started
  std::vector<RoutingEvent> events;
};

struct TriggerResult {
  bool accepted = false;
  std::string reason;
};

/// One routing run: plant truth, the mode machine and the active servo loop.
/// Not thread-safe; the owner serialises commands and ticks.
class RoutingSession {
 public:
  RoutingSession(ScenarioConfig cfg, MotionPrimitive prim, PlantParams params, ServoGains gains,
                 std::uint64_t seed, double dt = 0.01);

  /// Latest operator twist, used while in TELEOP.
  void set_teleop(const Twist& twist) { teleop_ = twist; }
  /// Starts the primitive at `hook_id` if it is the next hook and the tool is
  /// within the trigger radius. Rejections are logged with their reason.
  TriggerResult trigger(int hook_id);
  /// Advances the simulation by dt.
  void tick();

  const ScenarioState& state() const { return state_; }
  const PlantState& plant() const { return plant_; }
  const PlantParams& params() const { return params_; }
  const std::vector<Hook>& hooks() const { return cfg_.hooks; }
  const ScenarioConfig& config() const { return cfg_; }
  const MotionPrimitive& primitive() const { return prim_; }
  double dt() const { return dt_; }
  RigidTransform tool_pose() const { return true_tool_pose(plant_, params_); }
  /// Filtered sensor pose; empty until the first valid reading.
  std::optional<RigidTransform> estimated_pose() const;
  /// Next incomplete hook index, if any.
  std::optional<std::size_t> next_hook() const;
  /// Reference trajectory of the running primitive.
  const TaskTrajectory* active_reference() const { return servo_ ? &reference_ : nullptr; }

  void write_event_log(std::ostream& out) const;

 private:
  void log(std::string event, std::optional<int> hook, std::optional<double> e_meas = std::nullopt,
           std::string reason = {});
  void complete_primitive();

  ScenarioConfig cfg_;
  MotionPrimitive prim_;
  PlantParams params_;
  ServoGains gains_;
  std::uint64_t seed_;
  double dt_;
  PlantState plant_;
  ScenarioState state_;
  Twist teleop_;
  std::unique_ptr<ServoLoop> servo_;
  TaskTrajectory reference_;
  std::vector<Vec3> executed_;
  FilterState monitor_;
  std::mt19937_64 monitor_rng_;
};

nlohmann::json event_to_json(const RoutingEvent& e);

/// Drives the tool to each hook's start pose with a proportional twist on
/// the observed pose, then triggers. Stands in for the human between hooks.
class ScriptedOperator {
 public:
  double gain = 0.4;               // 1/s
  double max_linear = 0.15;        // m/s
  double max_angular = 0.5;        // rad/s
  double position_tolerance = 0.003;  // m
  double angle_tolerance = 0.02;      // rad
  double patience = 60.0;  // s of approach before triggering regardless

  /// Sets the teleop twist and triggers when aligned.
  void act(RoutingSession& session);

 private:
  std::optional<std::size_t> target_;
  double approach_started_ = 0.0;
};

struct ScenarioResult {
  std::vector<Hook> hooks;
  std::vector<RoutingEvent> events;
  bool completed = false;
  double sim_time = 0.0;
};

/// Runs the scenario with the scripted operator until DONE or max_time.
ScenarioResult run_headless_scenario(const ScenarioConfig& cfg, const MotionPrimitive& prim,
                                     const PlantParams& params, const ServoGains& gains, std::uint64_t seed,
                                     double dt = 0.01, double max_time = 600.0);

}  // namespace boomarm
