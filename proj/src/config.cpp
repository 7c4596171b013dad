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

#include <cmath>

#include "boomarm/errors.hpp"
#include "boomarm/json_io.hpp"
#include "boomarm/service.hpp"

namespace boomarm {

namespace {

using nlohmann::json;

void check_axis(const std::vector<double>& axis, const char* name) {
  if (axis.empty()) throw InvalidArgument(std::string("sweep axis ") + name + " is empty");
  for (std::size_t i = 0; i < axis.size(); ++i) {
    if (!std::isfinite(axis[i])) throw InvalidArgument(std::string("sweep axis ") + name + " is not finite");
    if (i > 0 && !(axis[i] > axis[i - 1])) {
      throw InvalidArgument(std::string("sweep axis ") + name + " must strictly increase");
    }
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  if (!j[key].is_object()) throw FormatError(std::string("config: '") + key + "' must be an object");
  return j[key];
}

json geometry_json(const RobotGeometry& g) {
  json limits = json::array();
  for (const auto& l : g.joint_limits) limits.push_back({l.min, l.max});
  return {{"base_height", g.base_height},
          {"shoulder_offset", g.shoulder_offset},
          {"wrist_offset", g.wrist_offset},
          {"ee_offset", g.ee_offset},
          {"joint_limits", limits},
          {"velocity_limits", g.velocity_limits}};
}

void read_geometry(const json& j, RobotGeometry& g) {
  const std::string what = "config geometry";
  read_field(j, "base_height", g.base_height, what);
  read_field(j, "shoulder_offset", g.shoulder_offset, what);
  read_field(j, "wrist_offset", g.wrist_offset, what);
  read_field(j, "ee_offset", g.ee_offset, what);
  if (j.contains("joint_limits")) {
    std::vector<std::array<double, 2>> limits;
    read_field(j, "joint_limits", limits, what);
    if (limits.size() != kNumJoints) throw FormatError(what + ": joint_limits needs 6 [min, max] pairs");
    for (int i = 0; i < kNumJoints; ++i) g.joint_limits[i] = {limits[i][0], limits[i][1]};
  }
  read_field(j, "velocity_limits", g.velocity_limits, what);
}

json deployer_json(const DeployerParams& d) {
  const bool constant = d.slip.kind == SlipModel::Kind::kConstant;
  return {{"kp", d.kp},
          {"ki", d.ki},
          {"encoder_counts_per_m", d.encoder_counts_per_m},
          {"max_spool_speed", d.max_spool_speed},
          {"velocity_window", d.velocity_window},
          {"slip",
           {{"kind", constant ? "constant" : "episodic"},
            {"factor", d.slip.factor},
            {"rate", d.slip.rate},
            {"depth", d.slip.depth},
            {"duration", d.slip.duration}}}};
}

void read_deployer(const json& j, DeployerParams& d) {
  const std::string what = "config deployer";
  read_field(j, "kp", d.kp, what);
  read_field(j, "ki", d.ki, what);
  read_field(j, "encoder_counts_per_m", d.encoder_counts_per_m, what);
  read_field(j, "max_spool_speed", d.max_spool_speed, what);
  read_field(j, "velocity_window", d.velocity_window, what);
  const json& slip = section(j, "slip");
  std::string kind = d.slip.kind == SlipModel::Kind::kConstant ? "constant" : "episodic";
  read_field(slip, "kind", kind, what);
  if (kind == "constant") {
    d.slip.kind = SlipModel::Kind::kConstant;
  } else if (kind == "episodic") {
    d.slip.kind = SlipModel::Kind::kEpisodic;
  } else {
    throw FormatError(what + ": slip kind must be 'constant' or 'episodic'");
  }
  read_field(slip, "factor", d.slip.factor, what);
  read_field(slip, "rate", d.slip.rate, what);
  read_field(slip, "depth", d.slip.depth, what);
  read_field(slip, "duration", d.slip.duration, what);
}

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  const std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

std::size_t SweepSpec::trial_count() const {
  return theta2_deg.size() * d3_m.size() * speed_mm_s.size() * static_cast<std::size_t>(std::max(repetitions, 0));
}

void SweepSpec::validate() const {
  check_axis(theta2_deg, "theta2_deg");
  check_axis(d3_m, "d3_m");
  check_axis(speed_mm_s, "speed_mm_s");
  if (speed_mm_s.front() <= 0) throw InvalidArgument("sweep speeds must be positive");
  if (repetitions < 1) throw InvalidArgument("sweep needs at least one repetition");
  if (!(square_side > 0)) throw InvalidArgument("square side must be positive");
  if (!(settle_time >= 0)) throw InvalidArgument("settle time must be non-negative");
}

void ServerConfig::validate() const {
  if (port < 0 || port > 65535) throw InvalidArgument("server port out of range");
  if (!(telemetry_hz > 0)) throw InvalidArgument("telemetry rate must be positive");
  if (!(teleop_timeout > 0)) throw InvalidArgument("teleop timeout must be positive");
  if (queue_capacity == 0) throw InvalidArgument("command queue capacity must be positive");
}

void AppConfig::validate() const {
  if (!(dt > 0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
  plant.validate();
  gains.validate();
  sweep.validate();
  server.validate();
  for (const auto& p : {scenario_path, grid_path}) {
    if (!p.empty() && !std::filesystem::exists(p)) throw InvalidArgument("referenced file not found: " + p.string());
  }
}

nlohmann::json config_to_json(const AppConfig& cfg) {
  const auto& d = cfg.plant.deflection;
  const auto& v = cfg.plant.vibration;
  const auto& g = cfg.gains;
  const auto& s = cfg.sweep;
  json j{{"dt", cfg.dt},
         {"seed", cfg.seed},
         {"geometry", geometry_json(cfg.plant.geometry)},
         {"deflection",
          {{"flexural_rigidity", d.flexural_rigidity},
           {"tip_mass", d.tip_mass},
           {"linear_density", d.linear_density},
           {"gravity", d.gravity}}},
         {"deployer", deployer_json(cfg.plant.deployer)},
         {"vibration",
          {{"enabled", v.enabled},
           {"damping_ratio", v.damping_ratio},
           {"freq_scale", v.freq_scale},
           {"gravity_stiffness", v.gravity_stiffness}}},
         {"servo",
          {{"kp_task", g.kp_task},
           {"pos_alpha", g.pos_alpha},
           {"slerp_alpha", g.slerp_alpha},
           {"sensor_noise_sigma", g.sensor_noise_sigma},
           {"dropout_prob", g.dropout_prob},
           {"max_linear_speed", g.max_linear_speed},
           {"max_angular_speed", g.max_angular_speed}}},
         {"sweep",
          {{"theta2_deg", s.theta2_deg},
           {"d3_m", s.d3_m},
           {"speed_mm_s", s.speed_mm_s},
           {"repetitions", s.repetitions},
           {"square_side_m", s.square_side},
           {"settle_time_s", s.settle_time},
           {"aggregate", s.aggregate == SweepSpec::Aggregate::kMax ? "max" : "mean"}}},
         {"server",
          {{"port", cfg.server.port},
           {"telemetry_hz", cfg.server.telemetry_hz},
           {"teleop_timeout_s", cfg.server.teleop_timeout},
           {"queue_capacity", cfg.server.queue_capacity}}}};
  if (!cfg.scenario_path.empty()) j["scenario"] = cfg.scenario_path.generic_string();
  if (!cfg.grid_path.empty()) j["error_grid"] = cfg.grid_path.generic_string();
  return j;
}

AppConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw FormatError("config: expected a JSON object");
  AppConfig cfg;
  const std::string what = "config";
  read_field(j, "dt", cfg.dt, what);
  read_field(j, "seed", cfg.seed, what);
  read_geometry(section(j, "geometry"), cfg.plant.geometry);

  const json& d = section(j, "deflection");
  read_field(d, "flexural_rigidity", cfg.plant.deflection.flexural_rigidity, "config deflection");
  read_field(d, "tip_mass", cfg.plant.deflection.tip_mass, "config deflection");
  read_field(d, "linear_density", cfg.plant.deflection.linear_density, "config deflection");
  read_field(d, "gravity", cfg.plant.deflection.gravity, "config deflection");

  read_deployer(section(j, "deployer"), cfg.plant.deployer);

  const json& v = section(j, "vibration");
  read_field(v, "enabled", cfg.plant.vibration.enabled, "config vibration");
  read_field(v, "damping_ratio", cfg.plant.vibration.damping_ratio, "config vibration");
  read_field(v, "freq_scale", cfg.plant.vibration.freq_scale, "config vibration");
  read_field(v, "gravity_stiffness", cfg.plant.vibration.gravity_stiffness, "config vibration");

  const json& g = section(j, "servo");
  read_field(g, "kp_task", cfg.gains.kp_task, "config servo");
  read_field(g, "pos_alpha", cfg.gains.pos_alpha, "config servo");
  read_field(g, "slerp_alpha", cfg.gains.slerp_alpha, "config servo");
  read_field(g, "sensor_noise_sigma", cfg.gains.sensor_noise_sigma, "config servo");
  read_field(g, "dropout_prob", cfg.gains.dropout_prob, "config servo");
  read_field(g, "max_linear_speed", cfg.gains.max_linear_speed, "config servo");
  read_field(g, "max_angular_speed", cfg.gains.max_angular_speed, "config servo");

  const json& s = section(j, "sweep");
  read_field(s, "theta2_deg", cfg.sweep.theta2_deg, "config sweep");
  read_field(s, "d3_m", cfg.sweep.d3_m, "config sweep");
  read_field(s, "speed_mm_s", cfg.sweep.speed_mm_s, "config sweep");
  read_field(s, "repetitions", cfg.sweep.repetitions, "config sweep");
  read_field(s, "square_side_m", cfg.sweep.square_side, "config sweep");
  read_field(s, "settle_time_s", cfg.sweep.settle_time, "config sweep");
  std::string agg = "mean";
  read_field(s, "aggregate", agg, "config sweep");
  if (agg == "mean") {
    cfg.sweep.aggregate = SweepSpec::Aggregate::kMean;
  } else if (agg == "max") {
    cfg.sweep.aggregate = SweepSpec::Aggregate::kMax;
  } else {
    throw FormatError("config sweep: aggregate must be 'mean' or 'max'");
  }

  const json& srv = section(j, "server");
  read_field(srv, "port", cfg.server.port, "config server");
  read_field(srv, "telemetry_hz", cfg.server.telemetry_hz, "config server");
  read_field(srv, "teleop_timeout_s", cfg.server.teleop_timeout, "config server");
  read_field(srv, "queue_capacity", cfg.server.queue_capacity, "config server");

  std::string path;
  if (j.contains("scenario")) {
    read_field(j, "scenario", path, what);
    cfg.scenario_path = resolve(path, base_dir);
  }
  if (j.contains("error_grid")) {
    read_field(j, "error_grid", path, what);
    cfg.grid_path = resolve(path, base_dir);
  }
  return cfg;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  AppConfig cfg = config_from_json(read_json_file(path), path.parent_path());
  cfg.validate();
  return cfg;
}

}  // namespace boomarm
