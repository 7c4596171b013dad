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

// Integration layer: the JSON application config, single closed-loop square
// trials and the (pitch, length, speed) experiment sweep that fills an ErrorGrid.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "boomarm/errormodel.hpp"
#include "boomarm/plant.hpp"
#include "boomarm/servo.hpp"

namespace boomarm {

struct SweepSpec {
  enum class Aggregate { kMean, kMax };

  std::vector<double> theta2_deg{0, 45, 90};
  std::vector<double> d3_m{0.6, 0.9, 1.2, 1.5, 1.8};
  std::vector<double> speed_mm_s{17, 33, 50, 67, 80};
  int repetitions = 5;
  double square_side = 0.1;  // m
  double settle_time = 0.5;  // s tracked after the square closes
  Aggregate aggregate = Aggregate::kMean;

  static SweepSpec paper() { return {}; }
  std::size_t trial_count() const;
  void validate() const;
};

struct ServerConfig {
  int port = 7777;
  double telemetry_hz = 20.0;
  double teleop_timeout = 0.5;  // s without a teleop message before the twist is zeroed
  std::size_t queue_capacity = 256;

  void validate() const;
};

struct AppConfig {
  PlantParams plant;
  ServoGains gains;
  SweepSpec sweep;
  std::filesystem::path scenario_path;  // empty: built-in scenario
  std::filesystem::path grid_path;      // empty: no grid loaded
  double dt = 0.01;
  std::uint64_t seed = 0;
  ServerConfig server;

  /// Parameter checks plus existence of every referenced file.
  void validate() const;
};

nlohmann::json config_to_json(const AppConfig& cfg);
/// Missing sections keep their defaults. Relative paths resolve against base_dir.
AppConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
/// Throws FormatError on malformed JSON and InvalidArgument on bad values or missing files.
AppConfig load_app_config(const std::filesystem::path& path);

struct TrialOutcome {
  std::size_t i = 0, j = 0, k = 0;  // grid indices
  int rep = 0;
  std::uint64_t seed = 0;
  double e_mm = 0.0;
  double coverage = 0.0;
  bool failed = false;
  std::string failure;
};

struct TrialRun {
  TrialOutcome outcome;
  TaskTrajectory reference;
  std::vector<double> t;
  std::vector<Vec3> path;  // true gripper position after every step
};

/// Tracking error beyond which a trial counts as diverged.
inline constexpr double kDivergenceLimit = 1.0;  // m

/// Starting at (0, theta2, d3, 0, 0.5, 0), tracks a square in the vertical
/// plane through the initial gripper position and scores it with the task tube.
TrialRun run_square_trial(const AppConfig& cfg, double theta2_deg, double d3, double speed_mm_s,
                          std::uint64_t seed, double side = 0.1, double settle_time = 0.5);

/// Every cell of a repetition shares one seed, so cells differ only by configuration.
std::uint64_t trial_seed(std::uint64_t base_seed, int rep);

struct SweepOptions {
  std::optional<std::filesystem::path> trial_dir;  // per-trial CSV logs
  std::function<void(std::size_t done, std::size_t total, const TrialOutcome&)> progress;
};

struct SweepResult {
  ErrorGrid grid;
  std::vector<TrialOutcome> trials;
};

/// Failed trials are excluded with a warning; a cell whose trials all fail
/// raises NoDataError.
SweepResult run_experiment_sweep(const SweepSpec& spec, const AppConfig& cfg, const SweepOptions& opts = {});

/// CSV `t,ref_x,ref_y,ref_z,x,y,z`.
void write_trial_csv(std::ostream& out, const TrialRun& run);

}  // namespace boomarm
