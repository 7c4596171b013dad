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

// Task-space servoing: reference trajectories, the simulated endpoint pose
// sensor, SLERP pose filtering and the proportional + feedforward law that
// feeds resolved-rate control.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "boomarm/kinematics.hpp"
#include "boomarm/plant.hpp"
#include "boomarm/se3.hpp"

namespace boomarm {

struct TrajectorySample {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  std::optional<Quat> orientation;
};

struct TrajectoryTarget {
  Vec3 p = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  std::optional<Quat> orientation;
};

struct TaskTrajectory {
  std::vector<TrajectorySample> samples;
  double speed = 0.0;  // m/s

  double start_time() const { return samples.front().t; }
  double end_time() const { return samples.back().t; }
  double duration() const { return end_time() - start_time(); }

  /// Strictly increasing times, finite samples, consecutive gaps within
  /// 1.5 * speed * dt, and either every sample or none carrying orientation.
  void validate() const;

  /// Piecewise-linear position and orientation slerp. The velocity is the
  /// slope of the active segment. Before the start the first sample is
  /// held, after the end the last one, both with zero velocity.
  TrajectoryTarget at(double t) const;
};

/// Square of the given side traversed at constant speed with sharp corners,
/// in the x-y plane of plane_pose, starting at its origin and heading along
/// +x then +y. Samples every dt plus one at each corner; the last sample
/// returns to the start.
TaskTrajectory generate_square_trajectory(double side, double speed, double dt,
                                          const RigidTransform& plane_pose);

/// Plane pose whose local x-y plane is the world x-z plane, origin at `origin`.
RigidTransform vertical_square_plane(const Vec3& origin);

/// CSV `t,x,y,z[,qw,qx,qy,qz]` with a header row.
void write_trajectory_csv(std::ostream& out, const TaskTrajectory& traj);
/// Throws FormatError. Speed is set to path length over duration.
TaskTrajectory read_trajectory_csv(std::istream& in);

struct PoseEstimate {
  Vec3 p_ee = Vec3::Zero();
  Quat orientation = Quat::Identity();
  bool valid = false;
  double t = 0.0;
};

struct FilterState {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
  double last_valid_t = 0.0;
  bool initialized = false;
};

struct ServoGains {
  // Tip-position feedback through the boom base adds kp of negative damping
  // to the tip mode, so kp stays below 2 zeta w at the longest reach.
  double kp_task = 0.4;  // 1/s
  double pos_alpha = 0.3;
  double slerp_alpha = 0.3;
  double sensor_noise_sigma = 0.002;  // m, and rad per axis for orientation
  double dropout_prob = 0.05;
  double max_linear_speed = 0.15;   // m/s
  double max_angular_speed = 1.0;   // rad/s

  void validate() const;
};

/// Noisy, occasionally missing reading of the true gripper pose. Every call
/// consumes the same number of draws so streams stay aligned across runs.
PoseEstimate pose_sensor_sim(const RigidTransform& true_pose, const ServoGains& gains,
                             std::mt19937_64& rng, double t = 0.0);

/// Exponential smoothing of position and SLERP of orientation. Invalid
/// readings hold the last state; the first valid reading initialises it.
FilterState filter_pose(const FilterState& state, const PoseEstimate& est, const ServoGains& gains);

/// v = p_dot + kp (p_task - p_ee). The angular part tracks the target
/// orientation with the same gain when one is given. Each part is clamped
/// in norm.
Twist task_space_control(const TrajectoryTarget& target, const FilterState& est,
                         const ServoGains& gains);

struct ServoStepResult {
  Vec6 joint_velocity = Vec6::Zero();
  Twist twist;
  PoseEstimate measurement;
};

/// Sense, filter, control and resolve into joint rates using the measured
/// joints and the deflection-corrected Jacobian.
ServoStepResult control_step(const PlantState& plant, const TaskTrajectory& traj, double t,
                             const ServoGains& gains, const PlantParams& params,
                             FilterState& filter, std::mt19937_64& rng);

/// Owns the filter and sensor random stream of one closed-loop run.
class ServoLoop {
 public:
  ServoLoop(TaskTrajectory traj, ServoGains gains, std::uint64_t seed);

  /// Joint velocity command for the plant's current state at time t.
  Vec6 step(const PlantState& plant, const PlantParams& params, double t);

  const FilterState& filter() const { return filter_; }
  const TaskTrajectory& trajectory() const { return traj_; }
  const ServoGains& gains() const { return gains_; }
  const ServoStepResult& last() const { return last_; }

 private:
  TaskTrajectory traj_;
  ServoGains gains_;
  FilterState filter_;
  std::mt19937_64 rng_;
  ServoStepResult last_;
};

}  // namespace boomarm
