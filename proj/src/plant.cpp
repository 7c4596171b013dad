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

#include "boomarm/plant.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "boomarm/errors.hpp"

namespace boomarm {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double quantize(double x, double counts_per_m) {
  return std::round(x * counts_per_m) / counts_per_m;
}

// Rigid boom tip position and sag axis y3.
std::pair<Vec3, Vec3> tip_and_sag_axis(const JointConfig& q, const RobotGeometry& geom) {
  const RigidTransform tip = boom_tip_frame(q, geom);
  return {tip.translation, tip.rotation.col(1)};
}

}  // namespace

void DeployerParams::validate() const {
  if (!(kp >= 0 && ki >= 0)) throw InvalidArgument("PI gains must be non-negative");
  if (!(encoder_counts_per_m > 0)) throw InvalidArgument("encoder counts per metre must be positive");
  if (!(max_spool_speed > 0)) throw InvalidArgument("max spool speed must be positive");
  if (velocity_window < 1) throw InvalidArgument("velocity window must be at least one sample");
  if (slip.kind == SlipModel::Kind::kConstant) {
    if (!(slip.factor > 0 && slip.factor <= 1)) throw InvalidArgument("slip factor must be in (0, 1]");
  } else {
    if (!(slip.depth > 0 && slip.depth <= 1)) throw InvalidArgument("slip depth must be in (0, 1]");
    if (!(slip.rate >= 0 && slip.duration >= 0)) {
      throw InvalidArgument("slip episode rate and duration must be non-negative");
    }
  }
}

void VibrationParams::validate() const {
  if (!(damping_ratio >= 0 && damping_ratio < 1)) throw InvalidArgument("damping ratio must be in [0, 1)");
  if (!(freq_scale > 0)) throw InvalidArgument("frequency scale must be positive");
}

void PlantParams::validate() const {
  geometry.validate();
  deflection.validate();
  deployer.validate();
  vibration.validate();
}

PlantState make_plant_state(const JointConfig& q0, const PlantParams& params, std::uint64_t seed) {
  params.validate();
  if (!q0.is_finite()) throw InvalidArgument("initial configuration has non-finite entries");
  PlantState s;
  s.q = params.geometry.clamp(q0);
  s.spool_pos = s.q.d3;
  s.slip = params.deployer.slip.kind == SlipModel::Kind::kConstant ? params.deployer.slip.factor : 1.0;
  s.encoder_history.push_back({0.0, quantize(s.q.d3, params.deployer.encoder_counts_per_m)});
  s.rng.seed(seed);
  return s;
}

double pi_deploy_control(double d3dot_ref, double d3dot_meas, double& integral,
                         const DeployerParams& params, double dt) {
  const double err = d3dot_ref - d3dot_meas;
  integral += err * dt;
  if (params.ki > 0) {
    const double limit = params.max_spool_speed / params.ki;
    integral = std::clamp(integral, -limit, limit);
  }
  const double cmd = d3dot_ref + params.kp * err + params.ki * integral;
  return std::clamp(cmd, -params.max_spool_speed, params.max_spool_speed);
}

EncoderReading encoder_measure(const PlantState& state, const DeployerParams& params) {
  (void)params;
  EncoderReading r;
  if (state.encoder_history.empty()) return r;
  const auto& newest = state.encoder_history.back();
  const auto& oldest = state.encoder_history.front();
  r.position = newest.position;
  const double span = newest.t - oldest.t;
  r.velocity = span > 0 ? (newest.position - oldest.position) / span : 0.0;
  return r;
}

JointConfig measured_joints(const PlantState& state, const DeployerParams& params) {
  JointConfig q = state.q;
  q.d3 = encoder_measure(state, params).position;
  return q;
}

double natural_frequency(double d3, const DeflectionParams& defl, const VibrationParams& vib) {
  if (!(d3 > 0)) return 0.0;
  const double effective_mass = defl.tip_mass + 0.2357 * defl.linear_density * d3;
  if (!(effective_mass > 0)) return 0.0;
  return vib.freq_scale *
         std::sqrt(3.0 * defl.flexural_rigidity / (effective_mass * d3 * d3 * d3));
}

double effective_frequency(const JointConfig& q, const DeflectionParams& defl,
                           const VibrationParams& vib) {
  const double wn = natural_frequency(q.d3, defl, vib);
  if (!vib.gravity_stiffness || wn == 0.0) return wn;
  const double effective_mass = defl.tip_mass + 0.2357 * defl.linear_density * q.d3;
  // Geometric stiffness 6P/(5L) of a cantilever under axial tip load P.
  const double axial = defl.gravity * std::sin(q.theta2) *
                       (defl.tip_mass + 0.5 * defl.linear_density * q.d3);
  const double w2 = wn * wn - 1.2 * axial / (q.d3 * effective_mass);
  return std::sqrt(std::max(w2, 0.05 * wn * wn));
}

VibrationMode vibration_step(const VibrationMode& mode, const JointConfig& q,
                             const DeflectionParams& defl, const VibrationParams& vib,
                             double base_excitation, double dt) {
  if (!vib.enabled) return mode;
  const double w = effective_frequency(q, defl, vib);
  if (!(w > 0)) return {};
  const double zeta = vib.damping_ratio;
  const double sigma = zeta * w;
  const double wd = w * std::sqrt(1.0 - zeta * zeta);
  const double y_eq = -base_excitation / (w * w);
  const double y0 = mode.y - y_eq, v0 = mode.ydot;
  const double decay = std::exp(-sigma * dt);
  const double c = std::cos(wd * dt), s = std::sin(wd * dt);
  VibrationMode out;
  out.y = y_eq + decay * (y0 * c + (v0 + sigma * y0) / wd * s);
  out.ydot = decay * (v0 * c - (w * w * y0 + sigma * v0) / wd * s);
  return out;
}

PlantState step_plant(const PlantState& state, const Vec6& cmd, const PlantParams& params, double dt) {
  if (!(dt > 0)) throw InvalidArgument("plant step dt must be positive");
  if (!cmd.allFinite()) throw InvalidArgument("joint velocity command has non-finite entries");
  const RobotGeometry& geom = params.geometry;
  const DeployerParams& dep = params.deployer;
  PlantState next = state;

  // Blossoming. One draw per step keeps the random stream aligned across runs
  // that differ only in their commands.
  if (dep.slip.kind == SlipModel::Kind::kConstant) {
    next.slip = dep.slip.factor;
  } else {
    const double u = uniform01(next.rng);
    if (next.episode_remaining > 0) {
      next.episode_remaining -= dt;
    } else if (u < dep.slip.rate * dt) {
      next.episode_remaining = dep.slip.duration;
    }
    next.slip = next.episode_remaining > 0 ? dep.slip.depth : 1.0;
  }

  // Revolute joints: theta += dt * theta_dot_ref.
  Vec6 x = state.q.vector();
  for (int i = 0; i < kNumJoints; ++i) {
    if (i == kBoomJoint) continue;
    const double v = std::clamp(cmd[i], -geom.velocity_limits[i], geom.velocity_limits[i]);
    x[i] = std::clamp(x[i] + dt * v, geom.joint_limits[i].min, geom.joint_limits[i].max);
  }

  // Boom: PI on the encoder-wheel velocity drives the spool. Extension pays
  // out only slip * spool length; retraction pulls the boom in one-for-one.
  const double ref = std::clamp(cmd[kBoomJoint], -geom.velocity_limits[kBoomJoint],
                                geom.velocity_limits[kBoomJoint]);
  const double meas = encoder_measure(state, dep).velocity;
  const double spool_v = pi_deploy_control(ref, meas, next.integ_err, dep, dt);
  const JointRange lim = geom.d3_limits();
  double d3 = x[kBoomJoint];
  if (spool_v >= 0) {
    const double room = std::max(lim.max - d3, 0.0);
    const double gain = std::min(next.slip * spool_v * dt, room);
    d3 += gain;
    next.spool_pos += gain < next.slip * spool_v * dt ? gain / next.slip : spool_v * dt;
  } else {
    const double room = std::max(d3 - lim.min, 0.0);
    const double loss = std::min(-spool_v * dt, room);
    d3 -= loss;
    next.spool_pos -= loss;
  }
  x[kBoomJoint] = d3;
  next.q = JointConfig::from_vector(x);
  next.t = state.t + dt;

  next.encoder_history.push_back({next.t, quantize(d3, dep.encoder_counts_per_m)});
  const auto keep = static_cast<std::size_t>(dep.velocity_window) + 1;
  if (next.encoder_history.size() > keep) {
    next.encoder_history.erase(next.encoder_history.begin(),
                               next.encoder_history.end() - static_cast<std::ptrdiff_t>(keep));
  }

  // Base excitation: acceleration of the rigid boom tip along the sag axis.
  const auto [tip_old, axis_old] = tip_and_sag_axis(state.q, geom);
  const auto [tip_new, axis_new] = tip_and_sag_axis(next.q, geom);
  (void)axis_old;
  const double sag_velocity = (tip_new - tip_old).dot(axis_new) / dt;
  const double base_accel = (sag_velocity - state.prev_sag_velocity) / dt;
  next.prev_sag_velocity = sag_velocity;
  if (params.vibration.enabled && next.q.d3 > 0) {
    next.vibration = vibration_step(state.vibration, next.q, params.deflection, params.vibration,
                                    base_accel, dt);
  } else {
    next.vibration = {};
  }
  return next;
}

RigidTransform true_tool_pose(const PlantState& state, const PlantParams& params) {
  RigidTransform pose = corrected_forward_kinematics(state.q, params.geometry, params.deflection);
  if (state.vibration.y != 0.0) {
    const Vec3 axis = boom_tip_frame(state.q, params.geometry).rotation.col(1);
    pose.translation += state.vibration.y * axis;
  }
  return pose;
}

PlantTraceWriter::PlantTraceWriter(std::ostream& out) : out_(out) {
  out_ << "t,theta1,theta2,d3,theta4,theta5,theta6,spool_pos,slip,vib_y\n";
}

void PlantTraceWriter::write(const PlantState& s) {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", s.t,
                s.q.theta1, s.q.theta2, s.q.d3, s.q.theta4, s.q.theta5, s.q.theta6, s.spool_pos,
                s.slip, s.vibration.y);
  out_ << buf;
}

}  // namespace boomarm
