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

#include "boomarm/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "boomarm/errors.hpp"

namespace boomarm {

namespace {

// Rotation from the pitched boom frame (x along boom, z up) to the sag frame
// {3}: x3 = -y, y3 = -z, z3 = x.
const Mat3& sag_alignment() {
  static const Mat3 s = [] {
    Mat3 m;
    m << 0, 0, 1,   //
        -1, 0, 0,   //
        0, -1, 0;
    return m;
  }();
  return s;
}

// cos(theta2) factor with its derivative. The sign gives the sag direction
// relative to y3; boom_deflection reports magnitudes.
struct DeflectionCoefficients {
  double delta_per_cos = 0.0;  // Q(d3) / EI
  double phi_per_cos = 0.0;
  double ddelta_dd3 = 0.0;     // derivatives of the above wrt d3
  double dphi_dd3 = 0.0;
};

DeflectionCoefficients coefficients(double d3, const DeflectionParams& p) {
  const double m = p.tip_mass, rho = p.linear_density, g = p.gravity;
  const double inv_ei = 1.0 / p.flexural_rigidity;
  const double d2 = d3 * d3;
  const double d3c = d2 * d3;
  DeflectionCoefficients c;
  c.delta_per_cos = inv_ei * (m * g * d3c / 3.0 + rho * g * d3c * d3 / 8.0);
  c.phi_per_cos = inv_ei * (m * g * d2 / 2.0 + rho * g * d3c / 6.0);
  c.ddelta_dd3 = inv_ei * (m * g * d2 + rho * g * d3c / 2.0);
  c.dphi_dd3 = inv_ei * (m * g * d3 + rho * g * d2 / 2.0);
  return c;
}

// Frames of the deflected chain in world coordinates.
struct Chain {
  Vec3 shoulder;
  Mat3 r_boom;        // pitched frame, x along boom
  Vec3 deflected_tip;
  Mat3 r_tip;         // pitched frame after the tip rotation
  Vec3 wrist;
  Mat3 r4, r5, r_tool;
  Vec3 tool;
};

RigidTransform wrist_chain(const JointConfig& q, const RobotGeometry& geom) {
  return RigidTransform::from_rotation(sag_alignment().transpose()) *
         RigidTransform::from_translation(Vec3(geom.wrist_offset, 0, 0)) *
         RigidTransform::from_rotation(rot_x(q.theta4) * rot_y(q.theta5) * rot_x(q.theta6)) *
         RigidTransform::from_translation(Vec3(geom.ee_offset, 0, 0));
}

Chain build_chain(const JointConfig& q, const RobotGeometry& geom, double signed_delta,
                  double signed_phi) {
  Chain c;
  c.shoulder = Vec3(0, 0, geom.base_height);
  c.r_boom = rot_z(q.theta1) * rot_y(-q.theta2);
  const Vec3 rigid_tip = c.shoulder + c.r_boom * Vec3(geom.shoulder_offset + q.d3, 0, 0);
  c.deflected_tip = rigid_tip + c.r_boom * Vec3(0, 0, -signed_delta);
  c.r_tip = c.r_boom * rot_y(signed_phi);
  c.wrist = c.deflected_tip + c.r_tip * Vec3(geom.wrist_offset, 0, 0);
  c.r4 = c.r_tip * rot_x(q.theta4);
  c.r5 = c.r4 * rot_y(q.theta5);
  c.r_tool = c.r5 * rot_x(q.theta6);
  c.tool = c.wrist + c.r_tool * Vec3(geom.ee_offset, 0, 0);
  return c;
}

void require_finite(const JointConfig& q) {
  if (!q.is_finite()) throw InvalidArgument("joint configuration has non-finite entries");
}

}  // namespace

Vec6 JointConfig::vector() const {
  Vec6 x;
  x << theta1, theta2, d3, theta4, theta5, theta6;
  return x;
}

JointConfig JointConfig::from_vector(const Vec6& x) {
  return {x[0], x[1], x[2], x[3], x[4], x[5]};
}

bool JointConfig::is_finite() const { return vector().allFinite(); }

void RobotGeometry::validate() const {
  if (!(base_height >= 0 && shoulder_offset >= 0 && wrist_offset >= 0 && ee_offset >= 0)) {
    throw InvalidArgument("geometry offsets must be non-negative");
  }
  for (int i = 0; i < kNumJoints; ++i) {
    if (!(joint_limits[i].min < joint_limits[i].max)) {
      throw InvalidArgument("joint " + std::to_string(i + 1) + " limits must satisfy min < max");
    }
    if (!(velocity_limits[i] > 0)) {
      throw InvalidArgument("joint " + std::to_string(i + 1) + " velocity limit must be positive");
    }
  }
}

bool RobotGeometry::within_limits(const JointConfig& q) const {
  const Vec6 x = q.vector();
  for (int i = 0; i < kNumJoints; ++i) {
    if (x[i] < joint_limits[i].min || x[i] > joint_limits[i].max) return false;
  }
  return true;
}

JointConfig RobotGeometry::clamp(const JointConfig& q) const {
  Vec6 x = q.vector();
  for (int i = 0; i < kNumJoints; ++i) {
    x[i] = std::clamp(x[i], joint_limits[i].min, joint_limits[i].max);
  }
  return JointConfig::from_vector(x);
}

void DeflectionParams::validate() const {
  if (!(flexural_rigidity > 0)) throw InvalidArgument("flexural rigidity EI must be positive");
  if (!(tip_mass >= 0)) throw InvalidArgument("tip mass must be non-negative");
  if (!(linear_density >= 0)) throw InvalidArgument("linear density must be non-negative");
  if (!(gravity >= 0)) throw InvalidArgument("gravity must be non-negative");
}

RigidTransform rigid_forward_kinematics(const JointConfig& q, const RobotGeometry& geom) {
  require_finite(q);
  return boom_tip_frame(q, geom) * wrist_chain(q, geom);
}

RigidTransform boom_tip_frame(const JointConfig& q, const RobotGeometry& geom) {
  const RigidTransform shoulder = RigidTransform::from_translation(Vec3(0, 0, geom.base_height)) *
                                  RigidTransform::from_rotation(rot_z(q.theta1)) *
                                  RigidTransform::from_rotation(rot_y(-q.theta2));
  const RigidTransform boom =
      RigidTransform::from_translation(Vec3(geom.shoulder_offset + q.d3, 0, 0));
  return shoulder * boom * RigidTransform::from_rotation(sag_alignment());
}

double load_factor(double d3, double tip_mass, double linear_density, double gravity) {
  const double d3c = d3 * d3 * d3;
  return tip_mass * gravity * d3c / 3.0 + linear_density * gravity * d3c * d3 / 8.0;
}

DeflectionResult boom_deflection(const JointConfig& q, const DeflectionParams& p) {
  p.validate();
  const auto c = coefficients(q.d3, p);
  const double cos_pitch = std::abs(std::cos(q.theta2));
  return {cos_pitch * c.delta_per_cos, cos_pitch * c.phi_per_cos};
}

RigidTransform deflection_transform(const DeflectionResult& d) {
  return {rot_x(-d.phi), Vec3(0, d.delta, 0)};
}

RigidTransform corrected_forward_kinematics(const JointConfig& q, const RobotGeometry& geom,
                                            const DeflectionParams& p) {
  require_finite(q);
  p.validate();
  const auto c = coefficients(q.d3, p);
  const double cos_pitch = std::cos(q.theta2);
  // Signed values: past vertical the gravity component flips to -y3.
  const DeflectionResult signed_defl{cos_pitch * c.delta_per_cos, cos_pitch * c.phi_per_cos};
  return boom_tip_frame(q, geom) * deflection_transform(signed_defl) * wrist_chain(q, geom);
}

JacobianMatrix jacobian(const JointConfig& q, const RobotGeometry& geom,
                        const DeflectionParams& p) {
  require_finite(q);
  p.validate();
  const auto k = coefficients(q.d3, p);
  const double cp = std::cos(q.theta2), sp = std::sin(q.theta2);
  const Chain c = build_chain(q, geom, cp * k.delta_per_cos, cp * k.phi_per_cos);
  const Vec3& tool = c.tool;

  JacobianMatrix j = JacobianMatrix::Zero();
  auto revolute = [&](int col, const Vec3& axis, const Vec3& point) {
    j.block<3, 1>(0, col) = axis.cross(tool - point);
    j.block<3, 1>(3, col) = axis;
  };
  // Sag and tip rotation respond to theta2 and d3; the tip rotation is about
  // the pitched y axis and pivots everything past the deflected tip.
  const Vec3 sag_dir = c.r_boom * Vec3(0, 0, -1);
  const Vec3 bend_axis = c.r_boom * Vec3::UnitY();
  auto add_deflection = [&](int col, double ddelta, double dphi) {
    const Vec3 w = bend_axis * dphi;
    j.block<3, 1>(0, col) += sag_dir * ddelta + w.cross(tool - c.deflected_tip);
    j.block<3, 1>(3, col) += w;
  };

  revolute(0, Vec3::UnitZ(), c.shoulder);
  revolute(1, rot_z(q.theta1) * -Vec3::UnitY(), c.shoulder);
  add_deflection(1, -sp * k.delta_per_cos, -sp * k.phi_per_cos);
  j.block<3, 1>(0, 2) = c.r_boom * Vec3::UnitX();
  add_deflection(2, cp * k.ddelta_dd3, cp * k.dphi_dd3);
  revolute(3, c.r_tip * Vec3::UnitX(), c.wrist);
  revolute(4, c.r4 * Vec3::UnitY(), c.wrist);
  revolute(5, c.r5 * Vec3::UnitX(), c.wrist);
  return j;
}

Mat6 damped_pseudoinverse(const JacobianMatrix& j, double lambda) {
  if (!(lambda >= 0)) throw InvalidArgument("damping lambda must be non-negative");
  const Mat6 gram = j * j.transpose() + lambda * lambda * Mat6::Identity();
  const Eigen::LLT<Mat6> llt(gram);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
    throw SingularMatrixError("J J^T + lambda^2 I is singular; retry with lambda > 0");
  }
  // gram is symmetric, so J^T gram^-1 = (gram^-1 J)^T.
  return llt.solve(j).transpose();
}

Vec6 resolved_rate(const Twist& v_task, const JointConfig& q, const RobotGeometry& geom,
                   const DeflectionParams& p, double lambda, bool apply_velocity_limits) {
  const JacobianMatrix j = jacobian(q, geom, p);
  Mat6 pinv;
  for (int attempt = 0;; ++attempt) {
    try {
      pinv = damped_pseudoinverse(j, lambda);
      break;
    } catch (const SingularMatrixError&) {
      if (attempt >= 8) throw;
      lambda = lambda > 0 ? lambda * 10.0 : kDefaultDamping;
    }
  }
  Vec6 qdot = pinv * v_task.stacked();
  if (apply_velocity_limits) {
    double scale = 1.0;
    for (int i = 0; i < kNumJoints; ++i) {
      const double ratio = std::abs(qdot[i]) / geom.velocity_limits[i];
      scale = std::max(scale, ratio);
    }
    qdot /= scale;
  }
  return qdot;
}

FlexuralRigidityFit fit_flexural_rigidity(std::span<const DeflectionSample> samples) {
  if (samples.size() < 1) throw InvalidArgument("no deflection samples");
  double qq = 0.0, qd = 0.0;
  for (const auto& s : samples) {
    const double q = load_factor(s.d3, s.tip_mass, s.linear_density, s.gravity);
    qq += q * q;
    qd += q * s.measured_delta;
  }
  if (qq == 0.0) throw DegenerateFitError("all load factors are zero");
  if (!(qd > 0.0)) throw DegenerateFitError("measured sag does not correlate with load");
  FlexuralRigidityFit fit;
  fit.flexural_rigidity = qq / qd;
  double sse = 0.0;
  for (const auto& s : samples) {
    const double q = load_factor(s.d3, s.tip_mass, s.linear_density, s.gravity);
    const double r = s.measured_delta - q / fit.flexural_rigidity;
    sse += r * r;
  }
  fit.residual_rms = std::sqrt(sse / static_cast<double>(samples.size()));
  return fit;
}

}  // namespace boomarm
