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

// Simulated boom manipulator: fixed-step joint integration, a spool deployer
// that loses length to blossoming, the boom encoder wheel, the deployment PI
// loop and a single lateral tip vibration mode.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "boomarm/kinematics.hpp"

namespace boomarm {

struct SlipModel {
  enum class Kind { kConstant, kEpisodic };
  Kind kind = Kind::kEpisodic;
  double factor = 1.0;    // constant mode: deployed / spooled length ratio
  double rate = 0.2;      // episodic mode: episodes per second (Poisson)
  double depth = 0.7;     // slip factor during an episode
  double duration = 0.5;  // s

  static SlipModel constant(double factor) {
    SlipModel m;
    m.kind = Kind::kConstant;
    m.factor = factor;
    return m;
  }
};

struct DeployerParams {
  double kp = 0.5;
  double ki = 2.0;  // 1/s
  SlipModel slip;
  double encoder_counts_per_m = 21220.659078919;  // 2000-count wheel, 30 mm diameter
  double max_spool_speed = 0.4;                   // m/s
  int velocity_window = 5;                        // samples in the backward difference

  void validate() const;
};

struct VibrationParams {
  bool enabled = true;
  double damping_ratio = 0.03;
  double freq_scale = 1.0;
  // Axial gravity load softens the mode as the boom rises toward vertical
  // and stiffens it when the boom hangs below horizontal.
  bool gravity_stiffness = true;

  void validate() const;
};

struct PlantParams {
  RobotGeometry geometry;
  DeflectionParams deflection;
  DeployerParams deployer;
  VibrationParams vibration;

  void validate() const;
};

struct VibrationMode {
  double y = 0.0;     // m, along the sag axis y3
  double ydot = 0.0;  // m/s
};

struct EncoderSample {
  double t = 0.0;
  double position = 0.0;  // quantised
};

/// Simulator truth. Copyable so snapshots can be handed to readers.
struct PlantState {
  double t = 0.0;
  JointConfig q;
  double spool_pos = 0.0;  // length paid out by the spool
  double slip = 1.0;
  VibrationMode vibration;
  double integ_err = 0.0;  // PI integral of velocity error, m

  std::vector<EncoderSample> encoder_history;  // oldest first
  double prev_sag_velocity = 0.0;
  double episode_remaining = 0.0;
  std::mt19937_64 rng;
};

PlantState make_plant_state(const JointConfig& q0, const PlantParams& params, std::uint64_t seed);

/// Deployment PI loop. Updates the integral in place (rectangular rule,
/// clamped so |ki * integral| <= max_spool_speed) and returns the spool
/// velocity command, saturated to +-max_spool_speed.
double pi_deploy_control(double d3dot_ref, double d3dot_meas, double& integral,
                         const DeployerParams& params, double dt);

/// Advances the plant one fixed step under the joint velocity command.
PlantState step_plant(const PlantState& state, const Vec6& cmd, const PlantParams& params, double dt);

struct EncoderReading {
  double position = 0.0;
  double velocity = 0.0;
};

EncoderReading encoder_measure(const PlantState& state, const DeployerParams& params);

/// Cantilever-with-tip-mass first bending frequency, rad/s.
double natural_frequency(double d3, const DeflectionParams& defl, const VibrationParams& vib);

/// natural_frequency with the pose-dependent gravity stiffness applied.
double effective_frequency(const JointConfig& q, const DeflectionParams& defl,
                           const VibrationParams& vib);

/// Exact zero-order-hold step of y'' + 2 zeta w y' + w^2 y = -base_excitation.
VibrationMode vibration_step(const VibrationMode& mode, const JointConfig& q,
                             const DeflectionParams& defl, const VibrationParams& vib,
                             double base_excitation, double dt);

/// Ground-truth gripper pose including the vibration offset.
RigidTransform true_tool_pose(const PlantState& state, const PlantParams& params);

/// What the joint encoders and the boom encoder wheel report.
JointConfig measured_joints(const PlantState& state, const DeployerParams& params);

struct TracePoint {
  double t = 0.0;
  double value = 0.0;
};

struct DampedSinusoidFit {
  double omega_n = 0.0;  // rad/s
  double zeta = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;  // rad
  double residual_rms = 0.0;
  int iterations = 0;
};

class FitConvergenceError : public std::runtime_error {
 public:
  FitConvergenceError(const std::string& what, const DampedSinusoidFit& best)
      : std::runtime_error(what), best_(best) {}
  const DampedSinusoidFit& best() const { return best_; }

 private:
  DampedSinusoidFit best_;
};

/// Fits A exp(-zeta w t) sin(w sqrt(1 - zeta^2) t + phase). Initial guess from
/// zero-crossing spacing and logarithmic decrement, then Levenberg-Marquardt.
DampedSinusoidFit fit_damped_sinusoid(std::span<const TracePoint> trace, int max_iterations = 200);

/// CSV log of plant truth, header t,theta1,theta2,d3,theta4,theta5,theta6,spool_pos,slip,vib_y.
class PlantTraceWriter {
 public:
  explicit PlantTraceWriter(std::ostream& out);
  void write(const PlantState& state);

 private:
  std::ostream& out_;
};

}  // namespace boomarm
