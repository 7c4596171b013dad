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

#include "boomarm/servo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "boomarm/errors.hpp"

namespace boomarm {

namespace {

Vec3 clamp_norm(const Vec3& v, double limit) {
  const double n = v.norm();
  return n > limit ? Vec3(v * (limit / n)) : v;
}

Quat shorter_slerp(const Quat& a, const Quat& b, double t) {
  return a.slerp(t, b).normalized();
}

}  // namespace

void TaskTrajectory::validate() const {
  if (samples.empty()) throw InvalidArgument("trajectory has no samples");
  if (!(speed >= 0) || !std::isfinite(speed)) throw InvalidArgument("trajectory speed must be finite");
  const bool oriented = samples.front().orientation.has_value();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!std::isfinite(s.t) || !s.p.allFinite()) throw InvalidArgument("trajectory sample is not finite");
    if (s.orientation.has_value() != oriented) {
      throw InvalidArgument("trajectory mixes samples with and without orientation");
    }
    if (s.orientation && std::abs(s.orientation->norm() - 1.0) > 1e-6) {
      throw InvalidArgument("trajectory orientation is not a unit quaternion");
    }
    if (i == 0) continue;
    const double dt = s.t - samples[i - 1].t;
    if (!(dt > 0)) throw InvalidArgument("trajectory times must strictly increase");
    const double gap = (s.p - samples[i - 1].p).norm();
    if (gap > 1.5 * speed * dt + 1e-12) throw InvalidArgument("trajectory jumps faster than its speed");
  }
}

TrajectoryTarget TaskTrajectory::at(double t) const {
  TrajectoryTarget out;
  if (samples.empty()) throw InvalidArgument("trajectory has no samples");
  if (t <= samples.front().t || samples.size() == 1) {
    out.p = samples.front().p;
    out.orientation = samples.front().orientation;
    return out;
  }
  if (t >= samples.back().t) {
    out.p = samples.back().p;
    out.orientation = samples.back().orientation;
    return out;
  }
  const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                   [](double v, const TrajectorySample& s) { return v < s.t; });
  const TrajectorySample& b = *it;
  const TrajectorySample& a = *(it - 1);
  const double span = b.t - a.t;
  const double u = (t - a.t) / span;
  out.p = a.p + u * (b.p - a.p);
  out.velocity = (b.p - a.p) / span;
  if (a.orientation && b.orientation) out.orientation = shorter_slerp(*a.orientation, *b.orientation, u);
  return out;
}

TaskTrajectory generate_square_trajectory(double side, double speed, double dt,
                                          const RigidTransform& plane_pose) {
  if (!(side > 0) || !(speed > 0) || !(dt > 0)) {
    throw InvalidArgument("square side, speed and dt must be positive");
  }
  const double leg_time = side / speed;
  const double total = 4.0 * leg_time;
  std::vector<double> times;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t >= total) break;
    times.push_back(t);
  }
  for (int c = 1; c <= 4; ++c) times.push_back(c * leg_time);
  std::sort(times.begin(), times.end());
  std::vector<double> unique;
  for (double t : times) {
    if (unique.empty() || t - unique.back() > 1e-9 * std::max(1.0, total)) {
      unique.push_back(t);
    } else if (std::abs(t - total) < 1e-9 * std::max(1.0, total)) {
      unique.back() = t;
    }
  }
  const Vec3 corners[5] = {Vec3(0, 0, 0), Vec3(side, 0, 0), Vec3(side, side, 0), Vec3(0, side, 0),
                           Vec3(0, 0, 0)};
  TaskTrajectory traj;
  traj.speed = speed;
  traj.samples.reserve(unique.size());
  for (double t : unique) {
    const int leg = std::min(static_cast<int>(t / leg_time), 3);
    const double u = std::clamp((t - leg * leg_time) / leg_time, 0.0, 1.0);
    const Vec3 local = corners[leg] + u * (corners[leg + 1] - corners[leg]);
    traj.samples.push_back({t, plane_pose.apply(local), std::nullopt});
  }
  traj.samples.back().p = plane_pose.apply(corners[0]);
  return traj;
}

RigidTransform vertical_square_plane(const Vec3& origin) { return {rot_x(std::numbers::pi / 2), origin}; }

void write_trajectory_csv(std::ostream& out, const TaskTrajectory& traj) {
  const bool oriented = !traj.samples.empty() && traj.samples.front().orientation.has_value();
  out << (oriented ? "t,x,y,z,qw,qx,qy,qz\n" : "t,x,y,z\n");
  char buf[256];
  for (const auto& s : traj.samples) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g", s.t, s.p.x(), s.p.y(), s.p.z());
    out << buf;
    if (oriented) {
      const Quat& q = *s.orientation;
      std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g,%.17g", q.w(), q.x(), q.y(), q.z());
      out << buf;
    }
    out << '\n';
  }
}

TaskTrajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("trajectory csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool oriented = false;
  if (line == "t,x,y,z,qw,qx,qy,qz") {
    oriented = true;
  } else if (line != "t,x,y,z") {
    throw FormatError("unexpected trajectory csv header: " + line);
  }
  const std::size_t width = oriented ? 8 : 4;
  TaskTrajectory traj;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw FormatError("trajectory csv row " + std::to_string(row) + ": bad number '" + cell + "'");
      }
    }
    if (v.size() != width) {
      throw FormatError("trajectory csv row " + std::to_string(row) + ": expected " +
                        std::to_string(width) + " columns");
    }
    TrajectorySample s{v[0], Vec3(v[1], v[2], v[3]), std::nullopt};
    if (oriented) s.orientation = Quat(v[4], v[5], v[6], v[7]).normalized();
    traj.samples.push_back(s);
  }
  if (traj.samples.empty()) throw FormatError("trajectory csv has no samples");
  double length = 0.0;
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    length += (traj.samples[i].p - traj.samples[i - 1].p).norm();
  }
  const double duration = traj.samples.back().t - traj.samples.front().t;
  traj.speed = duration > 0 ? length / duration : 0.0;
  try {
    traj.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("trajectory csv: ") + e.what());
  }
  return traj;
}

void ServoGains::validate() const {
  if (!(kp_task >= 0) || !std::isfinite(kp_task)) throw InvalidArgument("kp_task must be non-negative");
  if (!(pos_alpha > 0 && pos_alpha <= 1)) throw InvalidArgument("pos_alpha must be in (0, 1]");
  if (!(slerp_alpha > 0 && slerp_alpha <= 1)) throw InvalidArgument("slerp_alpha must be in (0, 1]");
  if (!(sensor_noise_sigma >= 0)) throw InvalidArgument("sensor noise must be non-negative");
  if (!(dropout_prob >= 0 && dropout_prob <= 1)) throw InvalidArgument("dropout_prob must be in [0, 1]");
  if (!(max_linear_speed > 0 && max_angular_speed > 0)) {
    throw InvalidArgument("twist limits must be positive");
  }
}

PoseEstimate pose_sensor_sim(const RigidTransform& true_pose, const ServoGains& gains,
                             std::mt19937_64& rng, double t) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double drop = uniform(rng);
  Vec3 dp, dr;
  for (int i = 0; i < 3; ++i) dp[i] = normal(rng);
  for (int i = 0; i < 3; ++i) dr[i] = normal(rng);
  PoseEstimate est;
  est.t = t;
  est.valid = drop >= gains.dropout_prob;
  est.p_ee = true_pose.translation + gains.sensor_noise_sigma * dp;
  est.orientation = Quat(exp_so3(gains.sensor_noise_sigma * dr) * true_pose.rotation).normalized();
  return est;
}

FilterState filter_pose(const FilterState& state, const PoseEstimate& est, const ServoGains& gains) {
  if (!est.valid) return state;
  FilterState out;
  out.initialized = true;
  out.last_valid_t = est.t;
  if (!state.initialized) {
    out.position = est.p_ee;
    out.orientation = est.orientation.normalized();
    return out;
  }
  out.position = (1.0 - gains.pos_alpha) * state.position + gains.pos_alpha * est.p_ee;
  out.orientation = shorter_slerp(state.orientation, est.orientation, gains.slerp_alpha);
  return out;
}

Twist task_space_control(const TrajectoryTarget& target, const FilterState& est,
                         const ServoGains& gains) {
  Twist out;
  out.v = clamp_norm(target.velocity + gains.kp_task * (target.p - est.position), gains.max_linear_speed);
  if (target.orientation) {
    const Mat3 err = target.orientation->toRotationMatrix() * est.orientation.toRotationMatrix().transpose();
    out.omega = clamp_norm(gains.kp_task * log_so3(err), gains.max_angular_speed);
  }
  return out;
}

ServoStepResult control_step(const PlantState& plant, const TaskTrajectory& traj, double t,
                             const ServoGains& gains, const PlantParams& params,
                             FilterState& filter, std::mt19937_64& rng) {
  ServoStepResult r;
  r.measurement = pose_sensor_sim(true_tool_pose(plant, params), gains, rng, t);
  filter = filter_pose(filter, r.measurement, gains);
  const JointConfig q = measured_joints(plant, params.deployer);
  if (!filter.initialized) return r;  // nothing seen yet: hold still
  r.twist = task_space_control(traj.at(t), filter, gains);
  r.joint_velocity = resolved_rate(r.twist, q, params.geometry, params.deflection);
  return r;
}

ServoLoop::ServoLoop(TaskTrajectory traj, ServoGains gains, std::uint64_t seed)
    : traj_(std::move(traj)), gains_(gains), rng_(seed) {
  traj_.validate();
  gains_.validate();
}

Vec6 ServoLoop::step(const PlantState& plant, const PlantParams& params, double t) {
  last_ = control_step(plant, traj_, t, gains_, params, filter_, rng_);
  return last_.joint_velocity;
}

}  // namespace boomarm
