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

#include "boomarm/se3.hpp"

#include <algorithm>
#include <cmath>

namespace boomarm {

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

Vec3 log_so3(const Mat3& r) {
  // Quaternion route is well conditioned everywhere including angle ~ pi.
  Quat q(r);
  q.normalize();
  if (q.w() < 0) q.coeffs() *= -1.0;
  const Vec3 xyz = q.vec();
  const double s = xyz.norm();
  if (s < 1e-12) return 2.0 * xyz;  // small-angle limit
  const double angle = 2.0 * std::atan2(s, q.w());
  return xyz * (angle / s);
}

Mat3 exp_so3(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-15) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

RigidTransform RigidTransform::from_quaternion(const Quat& q, const Vec3& t) {
  return {q.normalized().toRotationMatrix(), t};
}

Quat RigidTransform::quaternion() const {
  Quat q(rotation);
  q.normalize();
  if (q.w() < 0) q.coeffs() *= -1.0;
  return q;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

}  // namespace boomarm
