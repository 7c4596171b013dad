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

// JSON conversions shared by the configuration, scenario and wire formats.
// Poses are [x, y, z, qw, qx, qy, qz].

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

#include "boomarm/errors.hpp"
#include "boomarm/kinematics.hpp"

namespace boomarm {

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Two-space indent and a trailing newline.
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

nlohmann::json vec3_to_json(const Vec3& v);
Vec3 vec3_from_json(const nlohmann::json& j, const std::string& what);
nlohmann::json pose_to_json(const RigidTransform& pose);
RigidTransform pose_from_json(const nlohmann::json& j, const std::string& what);
nlohmann::json joints_to_json(const JointConfig& q);
JointConfig joints_from_json(const nlohmann::json& j, const std::string& what);

/// Overwrites `out` when `key` is present; a wrong type is a FormatError.
template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out, const std::string& what) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(what + ": field '" + key + "' has the wrong type");
  }
}

/// Like read_field but the key must be present.
template <class T>
T require_field(const nlohmann::json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(what + ": missing field '" + key + "'");
  T out{};
  read_field(j, key, out, what);
  return out;
}

}  // namespace boomarm
