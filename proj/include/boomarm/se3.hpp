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

#include <Eigen/Dense>

namespace boomarm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Quat = Eigen::Quaterniond;

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

// Rotation vector (axis * angle, angle in [0, pi]) of a rotation matrix.
Vec3 log_so3(const Mat3& r);
Mat3 exp_so3(const Vec3& w);

/// Rigid-body pose in SE(3). Rotation is kept as a matrix; quaternion() gives
/// the equivalent unit quaternion with non-negative w.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  RigidTransform() = default;
  RigidTransform(const Mat3& r, const Vec3& t) : rotation(r), translation(t) {}

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static RigidTransform from_rotation(const Mat3& r) { return {r, Vec3::Zero()}; }
  static RigidTransform from_quaternion(const Quat& q, const Vec3& t);

  RigidTransform operator*(const RigidTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const {
    Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }
  Quat quaternion() const;
  Eigen::Matrix4d matrix() const;

  bool is_finite() const { return rotation.allFinite() && translation.allFinite(); }
};

/// Spatial velocity: linear velocity of the tool point and angular velocity,
/// both expressed in the world frame.
struct Twist {
  Vec3 v = Vec3::Zero();
  Vec3 omega = Vec3::Zero();

  Vec6 stacked() const {
    Vec6 out;
    out << v, omega;
    return out;
  }
  static Twist from_stacked(const Vec6& x) { return {x.head<3>(), x.tail<3>()}; }
};

}  // namespace boomarm
