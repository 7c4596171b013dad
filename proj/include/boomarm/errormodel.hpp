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

// Task tubes, the 95th-percentile task error, the trilinear
// (pitch, length, speed) error grid and error-bounded speed selection.

#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <vector>

#include "boomarm/se3.hpp"
#include "boomarm/servo.hpp"

namespace boomarm {

inline constexpr double kDefaultGoalSpacing = 0.002;  // m

/// Arc-length resampling of the reference path every `spacing` metres with
/// both endpoints kept. A closed path drops its repeated endpoint.
std::vector<Vec3> discretize_reference(const TaskTrajectory& traj, double spacing = kDefaultGoalSpacing);

struct TaskTube {
  std::vector<Vec3> goals;
  std::vector<double> radii;  // m; 0 for goals with no assigned point
  std::vector<bool> covered;
  double coverage = 0.0;
};

/// Each point goes to its nearest goal (ties to the lowest index); a goal's
/// radius is the largest distance among its points.
TaskTube build_task_tube(const std::vector<Vec3>& goals, const std::vector<Vec3>& points);

/// Type-7 percentile (linear between closest ranks) of `values`, q in [0, 1].
double percentile(std::vector<double> values, double q);

/// 95th percentile of the covered radii, in mm. Warns below 90% coverage.
double task_error_p95(const TaskTube& tube);

/// CSV `gx,gy,gz,radius_m,covered`.
void write_tube_csv(std::ostream& out, const TaskTube& tube);

struct ErrorGrid {
  std::vector<double> theta2_deg;
  std::vector<double> d3_m;
  std::vector<double> speed_mm_s;
  std::vector<double> e_mm;  // row-major theta2 -> d3 -> speed
  nlohmann::json meta = nlohmann::json::object();

  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return e_mm[(i * d3_m.size() + j) * speed_mm_s.size() + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return e_mm[(i * d3_m.size() + j) * speed_mm_s.size() + k];
  }

  /// Axes non-empty and strictly increasing, values finite and >= 0, sizes match.
  void validate() const;

  static ErrorGrid with_axes(std::vector<double> theta2_deg, std::vector<double> d3_m,
                             std::vector<double> speed_mm_s);
};

nlohmann::json to_json(const ErrorGrid& grid);
/// Throws FormatError on a missing field or a shape mismatch.
ErrorGrid error_grid_from_json(const nlohmann::json& j);
ErrorGrid load_error_grid(const std::filesystem::path& path);
/// Two-space indented JSON with a trailing newline; byte-stable for equal grids.
void save_error_grid(const ErrorGrid& grid, const std::filesystem::path& path);

/// Trilinear interpolation; queries outside the axes clamp to the boundary.
double interpolate_error(const ErrorGrid& grid, double theta2_deg, double d3_m, double speed_mm_s);

struct SpeedSelection {
  double speed_mm_s = 0.0;
  double predicted_error_mm = 0.0;
};

class InfeasibleSpeedError : public std::runtime_error {
 public:
  InfeasibleSpeedError(const std::string& what, SpeedSelection best)
      : std::runtime_error(what), best_(best) {}
  /// Speed with the lowest predicted error in the scanned range.
  const SpeedSelection& suggestion() const { return best_; }

 private:
  SpeedSelection best_;
};

inline constexpr double kSpeedScanStep = 0.5;  // mm/s

/// Fastest speed in the range (clamped to the grid's speed axis) whose
/// predicted error is <= e_bar. Scans in kSpeedScanStep steps plus the top of
/// the range, since e need not be monotone in speed.
SpeedSelection select_speed(const ErrorGrid& grid, double theta2_deg, double d3_m, double e_bar_mm,
                            double speed_min_mm_s, double speed_max_mm_s);
SpeedSelection select_speed(const ErrorGrid& grid, double theta2_deg, double d3_m, double e_bar_mm);

inline constexpr int kSliceResolution = 50;

/// Dense d3 x speed slice at a fixed pitch, CSV `theta2_deg,d3_m,speed_mm_s,e_mm`,
/// kSliceResolution^2 rows spanning both axes end to end.
void export_slice(std::ostream& out, const ErrorGrid& grid, double theta2_deg);

}  // namespace boomarm
