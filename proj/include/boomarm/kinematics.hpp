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

// Geometric and elastic model of the R-R-P-R-R-R boom manipulator.
//
// Frame convention (world z-up, origin on the ground below the shoulder):
//   theta1  yaw about world z
//   theta2  pitch about the yawed y axis, 0 = horizontal, positive raises the boom
//   d3      boom extension along the pitched x axis
//   theta4/5/6  intersecting-axis wrist, roll(x) - pitch(y) - roll(x)
// The gripper point sits ee_offset along the final x axis. At q = 0 the tool
// frame is aligned with the world frame.
//
// The boom tip frame {3} used for the deflection transform has z along the
// boom, y pointing down-sag in the vertical bending plane and x = y cross z,
// so the tip rotation is a rotation about x3 and the sag a translation on y3.

#include <array>
#include <numbers>
#include <span>

#include "boomarm/se3.hpp"

namespace boomarm {

inline constexpr int kNumJoints = 6;
inline constexpr int kBoomJoint = 2;

struct JointConfig {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double d3 = 0.2;
  double theta4 = 0.0;
  double theta5 = 0.0;
  double theta6 = 0.0;

  Vec6 vector() const;
  static JointConfig from_vector(const Vec6& x);
  bool is_finite() const;
};

struct JointRange {
  double min = 0.0;
  double max = 0.0;
};

struct RobotGeometry {
  double base_height = 0.4;
  double shoulder_offset = 0.05;
  double wrist_offset = 0.08;
  double ee_offset = 0.12;
  // Index 2 is the boom range d3_limits.
  std::array<JointRange, kNumJoints> joint_limits{{{-std::numbers::pi, std::numbers::pi},
                                                   {-0.6, 2.2},
                                                   {0.2, 3.0},
                                                   {-std::numbers::pi, std::numbers::pi},
                                                   {-2.0, 2.0},
                                                   {-std::numbers::pi, std::numbers::pi}}};
  // rad/s for revolute joints, m/s for the boom.
  std::array<double, kNumJoints> velocity_limits{{1.5, 1.5, 0.4, 1.5, 1.5, 1.5}};

  JointRange d3_limits() const { return joint_limits[kBoomJoint]; }
  void validate() const;
  bool within_limits(const JointConfig& q) const;
  JointConfig clamp(const JointConfig& q) const;
};

/// Lumped cantilever parameters. tip_mass is the gripper mass carried at the
/// boom end; gravity = 0 models microgravity.
struct DeflectionParams {
  double flexural_rigidity = 100.0;  // N m^2
  double tip_mass = 0.5;             // kg
  double linear_density = 0.3;       // kg/m
  double gravity = 9.81;             // m/s^2

  void validate() const;
};

struct DeflectionResult {
  double delta = 0.0;  // tip sag, m
  double phi = 0.0;    // tip rotation, rad
};

using JacobianMatrix = Mat6;

RigidTransform rigid_forward_kinematics(const JointConfig& q, const RobotGeometry& geom);

/// Gravity load factor Q(d3) = M g d3^3 / 3 + rho g d3^4 / 8, so that a
/// horizontal boom sags by Q / EI.
double load_factor(double d3, double tip_mass, double linear_density, double gravity);

/// Cantilever sag and tip rotation under tip and self weight. Magnitudes use
/// |cos theta2|; the direction is carried by the corrected FK.
DeflectionResult boom_deflection(const JointConfig& q, const DeflectionParams& p);

/// T_def between {3} and {3'}: rotation about x3 by -phi, translation delta along y3.
RigidTransform deflection_transform(const DeflectionResult& d);

/// Rigid chain with T_def spliced in after the boom joint.
RigidTransform corrected_forward_kinematics(const JointConfig& q, const RobotGeometry& geom,
                                            const DeflectionParams& p);

/// Boom tip frame {3} of the rigid chain (z along boom, y down-sag).
RigidTransform boom_tip_frame(const JointConfig& q, const RobotGeometry& geom);

/// Analytic Jacobian of the deflection-corrected FK. Rows are [v; omega] of
/// the gripper point in world coordinates.
JacobianMatrix jacobian(const JointConfig& q, const RobotGeometry& geom, const DeflectionParams& p);

/// J^T (J J^T + lambda^2 I)^-1. Throws SingularMatrixError when lambda = 0 and
/// J J^T cannot be inverted.
Mat6 damped_pseudoinverse(const JacobianMatrix& j, double lambda);

inline constexpr double kDefaultDamping = 0.01;

/// qdot = J^+ v. Escalates lambda x10 on a singular solve. When any joint
/// exceeds its velocity limit the whole vector is scaled down, so the task
/// direction is kept.
Vec6 resolved_rate(const Twist& v_task, const JointConfig& q, const RobotGeometry& geom,
                   const DeflectionParams& p, double lambda = kDefaultDamping,
                   bool apply_velocity_limits = true);

struct DeflectionSample {
  double d3 = 0.0;
  double tip_mass = 0.0;
  double linear_density = 0.0;
  double gravity = 0.0;
  double measured_delta = 0.0;
};

struct FlexuralRigidityFit {
  double flexural_rigidity = 0.0;
  double residual_rms = 0.0;
};

/// Least-squares EI for delta = Q(d3) / EI over horizontal sag measurements.
FlexuralRigidityFit fit_flexural_rigidity(std::span<const DeflectionSample> samples);

}  // namespace boomarm
