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

#include "boomarm/json_io.hpp"

#include <cmath>
#include <fstream>

namespace boomarm {

namespace {

std::vector<double> numbers(const nlohmann::json& j, std::size_t n, const std::string& what) {
  if (!j.is_array() || j.size() != n) {
    throw FormatError(what + ": expected an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw FormatError(what + ": non-numeric entry");
    out.push_back(v.get<double>());
    if (!std::isfinite(out.back())) throw FormatError(what + ": non-finite entry");
  }
  return out;
}

}  // namespace

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json vec3_to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 vec3_from_json(const nlohmann::json& j, const std::string& what) {
  const auto v = numbers(j, 3, what);
  return {v[0], v[1], v[2]};
}

nlohmann::json pose_to_json(const RigidTransform& pose) {
  const Quat q = pose.quaternion();
  const Vec3& t = pose.translation;
  return {t.x(), t.y(), t.z(), q.w(), q.x(), q.y(), q.z()};
}

RigidTransform pose_from_json(const nlohmann::json& j, const std::string& what) {
  const auto v = numbers(j, 7, what);
  const Quat q(v[3], v[4], v[5], v[6]);
  if (std::abs(q.norm() - 1.0) > 1e-6) throw FormatError(what + ": quaternion is not unit length");
  return RigidTransform::from_quaternion(q.normalized(), Vec3(v[0], v[1], v[2]));
}

nlohmann::json joints_to_json(const JointConfig& q) {
  return {q.theta1, q.theta2, q.d3, q.theta4, q.theta5, q.theta6};
}

JointConfig joints_from_json(const nlohmann::json& j, const std::string& what) {
  const auto v = numbers(j, 6, what);
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

}  // namespace boomarm
