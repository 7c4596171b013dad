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

#include "boomarm/routing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "boomarm/errors.hpp"
#include "boomarm/json_io.hpp"
#include "boomarm/log.hpp"

namespace boomarm {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Spiral geometry in the hook frame: post on the local z axis.
constexpr double kPostRadius = 0.04;
const Vec3 kApproachStart(-0.10, -0.04, 0.0);
constexpr double kWrapInRise = 0.01;
constexpr double kWrapAroundRise = 0.02;
const Vec3 kRetreatOffset(0.08, 0.05, 0.0);

struct Segment {
  std::string stage;
  double length;
  std::function<Vec3(double)> at;  // u in [0, 1]
};

Segment line(std::string stage, Vec3 a, Vec3 b) {
  return {std::move(stage), (b - a).norm(), [a, b](double u) { return Vec3(a + u * (b - a)); }};
}

// Constant-pitch helix around z: angle a0 -> a0 + da, height z0 -> z0 + dz.
Segment helix(std::string stage, double a0, double da, double z0, double dz) {
  const double len = std::hypot(kPostRadius * da, dz);
  return {std::move(stage), len, [=](double u) {
            const double a = a0 + u * da;
            return Vec3(kPostRadius * std::cos(a), kPostRadius * std::sin(a), z0 + u * dz);
          }};
}

std::vector<Segment> spiral_segments() {
  const double pi = std::numbers::pi;
  const double z1 = kWrapInRise, z2 = kWrapInRise + kWrapAroundRise;
  const Vec3 end(kPostRadius, 0.0, z2);
  return {line("approach", kApproachStart, Vec3(0.0, -kPostRadius, 0.0)),
          helix("wrap-in", -pi / 2, pi / 2, 0.0, z1),
          helix("wrap-around", 0.0, 2 * pi, z1, kWrapAroundRise),
          line("retreat", end, end + kRetreatOffset)};
}

std::string hook_label(const Hook& h) { return "hook " + std::to_string(h.id); }

}  // namespace

void Hook::validate(const RobotGeometry& geom) const {
  if (!pose.is_finite() || !approach.is_finite()) throw InvalidArgument(hook_label(*this) + ": pose is not finite");
  const double t2 = theta2_nominal_deg * kDeg;
  const auto& pitch = geom.joint_limits[1];
  if (!(t2 >= pitch.min && t2 <= pitch.max)) throw InvalidArgument(hook_label(*this) + ": pitch outside joint limits");
  const auto d3 = geom.d3_limits();
  if (!(d3_nominal >= d3.min && d3_nominal <= d3.max)) {
    throw InvalidArgument(hook_label(*this) + ": boom length outside limits");
  }
}

void MotionPrimitive::validate() const {
  if (samples.samples.empty()) throw InvalidArgument("primitive has no samples");
  if (!(nominal_speed > 0) || !std::isfinite(nominal_speed)) {
    throw InvalidArgument("primitive nominal speed must be positive");
  }
  if (samples.start_time() != 0.0) throw InvalidArgument("primitive time must start at 0");
  for (std::size_t i = 0; i < samples.samples.size(); ++i) {
    const auto& s = samples.samples[i];
    if (!std::isfinite(s.t) || !s.p.allFinite()) throw InvalidArgument("primitive sample is not finite");
    if (i > 0 && !(s.t > samples.samples[i - 1].t)) throw InvalidArgument("primitive times must strictly increase");
    if (s.p.norm() > kMaxExtent) throw InvalidArgument("primitive leaves the 0.5 m hook neighbourhood");
  }
}

MotionPrimitive record_primitive(const std::vector<TrajectorySample>& demo, const RigidTransform& demo_hook_frame,
                                 double resample_dt, std::string name) {
  if (demo.size() < 2) throw InvalidArgument("a demonstration needs at least two samples");
  if (!(resample_dt > 0) || !std::isfinite(resample_dt)) throw InvalidArgument("resample dt must be positive");
  const RigidTransform to_local = demo_hook_frame.inverse();
  const Quat r_local(to_local.rotation);
  TaskTrajectory local;
  double length = 0.0;
  for (std::size_t i = 0; i < demo.size(); ++i) {
    const auto& s = demo[i];
    if (!std::isfinite(s.t) || !s.p.allFinite()) throw InvalidArgument("demonstration sample is not finite");
    if (i > 0 && !(s.t > demo[i - 1].t)) throw InvalidArgument("demonstration times must strictly increase");
    if (s.orientation.has_value() != demo.front().orientation.has_value()) {
      throw InvalidArgument("demonstration mixes samples with and without orientation");
    }
    TrajectorySample l{s.t - demo.front().t, to_local.apply(s.p), std::nullopt};
    if (s.orientation) l.orientation = (r_local * *s.orientation).normalized();
    if (i > 0) length += (l.p - local.samples.back().p).norm();
    local.samples.push_back(l);
  }
  if (length < 1e-9) throw InvalidArgument("demonstration has zero path length");

  const double duration = local.end_time();
  MotionPrimitive prim;
  prim.name = std::move(name);
  prim.nominal_speed = 1000.0 * length / duration;
  prim.samples.speed = length / duration;
  const auto n = static_cast<long>(std::floor(duration / resample_dt + 1e-9));
  for (long k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * resample_dt;
    const auto target = local.at(t);
    prim.samples.samples.push_back({t, target.p, target.orientation});
  }
  if (duration - prim.samples.end_time() > 1e-9 * resample_dt) {
    prim.samples.samples.push_back({duration, local.samples.back().p, local.samples.back().orientation});
  }
  prim.validate();
  return prim;
}

TaskTrajectory replay_primitive_at_hook(const MotionPrimitive& prim, const RigidTransform& hook_pose,
                                        double speed_mm_s) {
  if (!(speed_mm_s > 0) || !std::isfinite(speed_mm_s)) throw InvalidArgument("replay speed must be positive");
  const double scale = prim.nominal_speed / speed_mm_s;
  const Quat r(hook_pose.rotation);
  TaskTrajectory out;
  out.speed = speed_mm_s / 1000.0;
  out.samples.reserve(prim.samples.samples.size());
  for (const auto& s : prim.samples.samples) {
    TrajectorySample w{s.t * scale, hook_pose.apply(s.p), std::nullopt};
    if (s.orientation) w.orientation = (r * *s.orientation).normalized();
    out.samples.push_back(w);
  }
  return out;
}

std::vector<TrajectorySample> spiral_hook_demo(double speed_m_s, double dt, const RigidTransform& frame,
                                               std::vector<PrimitiveStage>* stages) {
  if (!(speed_m_s > 0) || !(dt > 0)) throw InvalidArgument("spiral demo needs positive speed and dt");
  const auto segs = spiral_segments();
  double total = 0.0;
  if (stages) stages->clear();
  for (const auto& s : segs) {
    total += s.length;
    if (stages) stages->push_back({s.stage, total / speed_m_s});
  }
  const auto point = [&](double arc) {
    for (const auto& s : segs) {
      if (arc <= s.length || &s == &segs.back()) return s.at(std::clamp(arc / s.length, 0.0, 1.0));
      arc -= s.length;
    }
    return segs.back().at(1.0);
  };
  const double duration = total / speed_m_s;
  std::vector<TrajectorySample> out;
  const auto n = static_cast<long>(std::floor(duration / dt + 1e-9));
  for (long k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    out.push_back({t, frame.apply(point(speed_m_s * t)), std::nullopt});
  }
  if (duration - out.back().t > 1e-9 * dt) out.push_back({duration, frame.apply(point(total)), std::nullopt});
  return out;
}

MotionPrimitive default_spiral_primitive() {
  std::vector<PrimitiveStage> stages;
  const auto demo = spiral_hook_demo(0.03, 0.01, RigidTransform{}, &stages);
  MotionPrimitive prim = record_primitive(demo, RigidTransform{}, 0.01, "spiral_hook");
  prim.stages = std::move(stages);
  return prim;
}

nlohmann::json primitive_to_json(const MotionPrimitive& prim) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : prim.samples.samples) {
    nlohmann::json row{{"t", s.t}, {"p", vec3_to_json(s.p)}};
    if (s.orientation) row["q"] = {s.orientation->w(), s.orientation->x(), s.orientation->y(), s.orientation->z()};
    samples.push_back(std::move(row));
  }
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& st : prim.stages) stages.push_back({{"name", st.name}, {"t_end", st.t_end}});
  return {{"name", prim.name},
          {"nominal_speed_mm_s", prim.nominal_speed},
          {"stages", std::move(stages)},
          {"samples", std::move(samples)}};
}

MotionPrimitive primitive_from_json(const nlohmann::json& j) {
  const std::string what = "primitive";
  MotionPrimitive prim;
  prim.name = require_field<std::string>(j, "name", what);
  prim.nominal_speed = require_field<double>(j, "nominal_speed_mm_s", what);
  prim.samples.speed = prim.nominal_speed / 1000.0;
  if (!j.contains("samples") || !j["samples"].is_array()) throw FormatError(what + ": missing 'samples' array");
  for (const auto& row : j["samples"]) {
    TrajectorySample s;
    s.t = require_field<double>(row, "t", what);
    s.p = vec3_from_json(row.at("p"), what + " sample position");
    if (row.contains("q")) {
      const auto q = row["q"];
      if (!q.is_array() || q.size() != 4) throw FormatError(what + ": sample quaternion needs 4 numbers");
      try {
        s.orientation = Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
      } catch (const nlohmann::json::exception&) {
        throw FormatError(what + ": non-numeric quaternion");
      }
    }
    prim.samples.samples.push_back(s);
  }
  if (j.contains("stages")) {
    for (const auto& st : j["stages"]) {
      prim.stages.push_back({require_field<std::string>(st, "name", what), require_field<double>(st, "t_end", what)});
    }
  }
  try {
    prim.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(what + " '" + prim.name + "': " + e.what());
  }
  return prim;
}

void save_primitive_library(const std::vector<MotionPrimitive>& prims, const std::filesystem::path& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : prims) arr.push_back(primitive_to_json(p));
  write_json_file({{"primitives", std::move(arr)}}, path);
}

std::vector<MotionPrimitive> load_primitive_library(const std::filesystem::path& path) {
  const auto j = read_json_file(path);
  if (!j.is_object() || !j.contains("primitives") || !j["primitives"].is_array()) {
    throw FormatError(path.string() + ": missing 'primitives' array");
  }
  std::vector<MotionPrimitive> out;
  for (const auto& p : j["primitives"]) out.push_back(primitive_from_json(p));
  return out;
}

double measure_routing_error(const std::vector<Vec3>& executed, const TaskTrajectory& reference) {
  return task_error_p95(build_task_tube(discretize_reference(reference), executed));
}

void ScenarioConfig::validate(const RobotGeometry& geom) const {
  if (hooks.empty()) throw InvalidArgument("scenario has no hooks");
  std::set<int> ids;
  for (const auto& h : hooks) {
    h.validate(geom);
    if (!ids.insert(h.id).second) throw InvalidArgument("duplicate " + hook_label(h));
  }
  if (!(ebar_mm > 0)) throw InvalidArgument("scenario error threshold must be positive");
  if (!(trigger_radius > 0)) throw InvalidArgument("trigger radius must be positive");
  if (!(settle_time >= 0)) throw InvalidArgument("settle time must be non-negative");
  if (!start.is_finite() || !geom.within_limits(start)) throw InvalidArgument("scenario start is outside joint limits");
}

MotionPrimitive scenario_primitive(const ScenarioConfig& cfg) {
  if (cfg.primitive_file.empty()) return default_spiral_primitive();
  for (auto& prim : load_primitive_library(cfg.primitive_file)) {
    if (prim.name == cfg.primitive_name) return prim;
  }
  throw FormatError(cfg.primitive_file.string() + ": no primitive named '" + cfg.primitive_name + "'");
}

JointConfig hook_configuration(double theta1, double theta2_deg, double d3) {
  return {theta1, theta2_deg * kDeg, d3, 0.0, 0.5, 0.0};
}

ScenarioConfig make_scenario(const std::vector<std::pair<double, double>>& rows, const MotionPrimitive& prim,
                             const PlantParams& params) {
  if (rows.empty()) throw InvalidArgument("scenario needs at least one hook");
  prim.validate();
  constexpr double kYawStep = 0.3;  // rad between neighbouring hooks
  ScenarioConfig cfg;
  cfg.primitive_name = prim.name;
  const Vec3 p0 = prim.samples.samples.front().p;
  const double mid = 0.5 * static_cast<double>(rows.size() - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double yaw = kYawStep * (static_cast<double>(i) - mid);
    const auto [pitch, length] = rows[i];
    Hook h;
    h.id = static_cast<int>(i) + 1;
    h.theta2_nominal_deg = pitch;
    h.d3_nominal = length;
    h.approach = corrected_forward_kinematics(hook_configuration(yaw, pitch, length), params.geometry,
                                              params.deflection);
    // Local x radial, local y up, post axis horizontal and tangential.
    const Mat3 r = rot_z(yaw) * rot_x(std::numbers::pi / 2);
    h.pose = RigidTransform(r, h.approach.translation - r * p0);
    cfg.hooks.push_back(h);
  }
  const double yaw0 = kYawStep * (0.0 - mid) - 0.25;
  cfg.start = hook_configuration(yaw0, 20.0, 1.0);
  cfg.validate(params.geometry);
  return cfg;
}

ScenarioConfig default_scenario(const MotionPrimitive& prim, const PlantParams& params) {
  return make_scenario({{35.0, 1.27}, {24.0, 1.78}, {13.0, 1.07}, {31.0, 1.55}}, prim, params);
}

nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
  nlohmann::json hooks = nlohmann::json::array();
  for (const auto& h : cfg.hooks) {
    hooks.push_back({{"id", h.id},
                     {"pose", pose_to_json(h.pose)},
                     {"approach", pose_to_json(h.approach)},
                     {"theta2_deg", h.theta2_nominal_deg},
                     {"d3_m", h.d3_nominal}});
  }
  nlohmann::json j{{"ebar_mm", cfg.ebar_mm},
                   {"trigger_radius_m", cfg.trigger_radius},
                   {"settle_time_s", cfg.settle_time},
                   {"start", joints_to_json(cfg.start)},
                   {"primitive", cfg.primitive_name},
                   {"hooks", std::move(hooks)}};
  if (!cfg.primitive_file.empty()) j["primitive_file"] = cfg.primitive_file.generic_string();
  return j;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  const std::string what = "scenario";
  if (!j.is_object()) throw FormatError(what + ": expected an object");
  ScenarioConfig cfg;
  read_field(j, "ebar_mm", cfg.ebar_mm, what);
  read_field(j, "trigger_radius_m", cfg.trigger_radius, what);
  read_field(j, "settle_time_s", cfg.settle_time, what);
  read_field(j, "primitive", cfg.primitive_name, what);
  if (j.contains("start")) cfg.start = joints_from_json(j["start"], what + " start");
  if (j.contains("primitive_file")) {
    std::filesystem::path p = require_field<std::string>(j, "primitive_file", what);
    cfg.primitive_file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  if (!j.contains("hooks") || !j["hooks"].is_array()) throw FormatError(what + ": missing 'hooks' array");
  for (const auto& row : j["hooks"]) {
    Hook h;
    h.id = require_field<int>(row, "id", what + " hook");
    const std::string label = what + " hook " + std::to_string(h.id);
    h.pose = pose_from_json(row.at("pose"), label + " pose");
    h.approach = row.contains("approach") ? pose_from_json(row["approach"], label + " approach") : h.pose;
    h.theta2_nominal_deg = require_field<double>(row, "theta2_deg", label);
    h.d3_nominal = require_field<double>(row, "d3_m", label);
    cfg.hooks.push_back(h);
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json_file(path), path.parent_path());
}

void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path) {
  write_json_file(scenario_to_json(cfg), path);
}

void assign_hook_speeds(std::vector<Hook>& hooks, const ErrorGrid& grid, double ebar_mm) {
  for (auto& h : hooks) {
    try {
      const auto sel = select_speed(grid, h.theta2_nominal_deg, h.d3_nominal, ebar_mm);
      h.s_star = sel.speed_mm_s;
      h.e_pred = sel.predicted_error_mm;
    } catch (const InfeasibleSpeedError& e) {
      h.s_star = e.suggestion().speed_mm_s;
      h.e_pred = e.suggestion().predicted_error_mm;
      std::ostringstream msg;
      msg << hook_label(h) << ": no speed meets " << ebar_mm << " mm, using " << h.s_star << " mm/s";
      warn(msg.str());
    }
  }
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::kTeleop:
      return "TELEOP";
    case Mode::kPrimitive:
      return "PRIMITIVE";
    case Mode::kDone:
      return "DONE";
  }
  return "?";
}

RoutingSession::RoutingSession(ScenarioConfig cfg, MotionPrimitive prim, PlantParams params, ServoGains gains,
                               std::uint64_t seed, double dt)
    : cfg_(std::move(cfg)),
      prim_(std::move(prim)),
      params_(std::move(params)),
      gains_(gains),
      seed_(seed),
      dt_(dt),
      monitor_rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
  if (!(dt > 0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
  params_.validate();
  gains_.validate();
  cfg_.validate(params_.geometry);
  prim_.validate();
  plant_ = make_plant_state(cfg_.start, params_, seed);
}

std::optional<RigidTransform> RoutingSession::estimated_pose() const {
  const FilterState& f = servo_ && servo_->filter().initialized ? servo_->filter() : monitor_;
  if (!f.initialized) return std::nullopt;
  return RigidTransform::from_quaternion(f.orientation, f.position);
}

std::optional<std::size_t> RoutingSession::next_hook() const {
  for (std::size_t i = 0; i < cfg_.hooks.size(); ++i) {
    if (!cfg_.hooks[i].e_meas) return i;
  }
  return std::nullopt;
}

void RoutingSession::log(std::string event, std::optional<int> hook, std::optional<double> e_meas,
                         std::string reason) {
  state_.events.push_back({plant_.t, std::move(event), hook, e_meas, std::move(reason)});
}

TriggerResult RoutingSession::trigger(int hook_id) {
  const auto reject = [&](std::string reason) {
    log("trigger_rejected", hook_id, std::nullopt, reason);
    return TriggerResult{false, std::move(reason)};
  };
  if (state_.mode == Mode::kPrimitive) return reject("a primitive is already running");
  if (state_.mode == Mode::kDone) return reject("all hooks are complete");
  const auto it = std::find_if(cfg_.hooks.begin(), cfg_.hooks.end(), [&](const Hook& h) { return h.id == hook_id; });
  if (it == cfg_.hooks.end()) return reject("unknown hook");
  if (it->e_meas) return reject("hook already completed");
  const std::size_t idx = static_cast<std::size_t>(it - cfg_.hooks.begin());
  if (next_hook() != idx) return reject("hook " + std::to_string(cfg_.hooks[*next_hook()].id) + " is next");
  const double dist = (tool_pose().translation - it->pose.translation).norm();
  if (dist > cfg_.trigger_radius) {
    std::ostringstream msg;
    msg << "tool is " << dist << " m from the hook";
    return reject(msg.str());
  }

  const double speed = it->s_star > 0 ? it->s_star : prim_.nominal_speed;
  reference_ = replay_primitive_at_hook(prim_, it->pose, speed);
  for (auto& s : reference_.samples) s.t += plant_.t;
  servo_ = std::make_unique<ServoLoop>(reference_, gains_, seed_ * 1000003ULL + static_cast<std::uint64_t>(hook_id));
  executed_.clear();
  state_.mode = Mode::kPrimitive;
  state_.active_hook = static_cast<int>(idx);
  state_.primitive_progress = 0.0;
  teleop_ = Twist{};
  log("primitive_start", hook_id);
  return {true, {}};
}

void RoutingSession::tick() {
  Vec6 qdot = Vec6::Zero();
  if (state_.mode == Mode::kPrimitive) {
    qdot = servo_->step(plant_, params_, plant_.t);
  } else if (teleop_.v.squaredNorm() + teleop_.omega.squaredNorm() > 0) {
    qdot = resolved_rate(teleop_, measured_joints(plant_, params_.deployer), params_.geometry, params_.deflection);
  }
  plant_ = step_plant(plant_, qdot, params_, dt_);
  const RigidTransform pose = tool_pose();
  monitor_ = filter_pose(monitor_, pose_sensor_sim(pose, gains_, monitor_rng_, plant_.t), gains_);
  if (state_.mode != Mode::kPrimitive) return;
  executed_.push_back(pose.translation);
  state_.primitive_progress = plant_.t - reference_.start_time();
  if (plant_.t >= reference_.end_time() + cfg_.settle_time - 1e-9) complete_primitive();
}

void RoutingSession::complete_primitive() {
  Hook& h = cfg_.hooks[static_cast<std::size_t>(*state_.active_hook)];
  h.e_meas = measure_routing_error(executed_, reference_);
  state_.hooks_completed.push_back(h.id);
  log("primitive_complete", h.id, h.e_meas);
  servo_.reset();
  state_.active_hook.reset();
  teleop_ = Twist{};
  if (next_hook()) {
    state_.mode = Mode::kTeleop;
  } else {
    state_.mode = Mode::kDone;
    log("scenario_done", std::nullopt);
  }
}

nlohmann::json event_to_json(const RoutingEvent& e) {
  nlohmann::json j{{"t", e.t}, {"event", e.event}, {"hook", nullptr}, {"e_meas", nullptr}};
  if (e.hook) j["hook"] = *e.hook;
  if (e.e_meas) j["e_meas"] = *e.e_meas;
  if (!e.reason.empty()) j["reason"] = e.reason;
  return j;
}

void RoutingSession::write_event_log(std::ostream& out) const {
  for (const auto& e : state_.events) out << event_to_json(e).dump() << '\n';
}

void ScriptedOperator::act(RoutingSession& session) {
  const auto next = session.next_hook();
  if (session.state().mode != Mode::kTeleop || !next) {
    target_.reset();
    session.set_teleop(Twist{});
    return;
  }
  const double t = session.plant().t;
  if (target_ != next) {
    target_ = next;
    approach_started_ = t;
  }
  const Hook& h = session.hooks()[*next];
  const RigidTransform pose = session.tool_pose();
  const Vec3 dp = h.approach.translation - pose.translation;
  const Vec3 dr = log_so3(h.approach.rotation * pose.rotation.transpose());
  if ((dp.norm() < position_tolerance && dr.norm() < angle_tolerance) || t - approach_started_ > patience) {
    session.set_teleop(Twist{});
    session.trigger(h.id);
    return;
  }
  const auto clamp_norm = [](Vec3 v, double max) { return v.norm() > max ? Vec3(v * (max / v.norm())) : v; };
  session.set_teleop({clamp_norm(gain * dp, max_linear), clamp_norm(gain * dr, max_angular)});
}

ScenarioResult run_headless_scenario(const ScenarioConfig& cfg, const MotionPrimitive& prim,
                                     const PlantParams& params, const ServoGains& gains, std::uint64_t seed,
                                     double dt, double max_time) {
  RoutingSession session(cfg, prim, params, gains, seed, dt);
  ScriptedOperator op;
  while (session.state().mode != Mode::kDone && session.plant().t < max_time) {
    op.act(session);
    session.tick();
  }
  return {session.hooks(), session.state().events, session.state().mode == Mode::kDone, session.plant().t};
}

}  // namespace boomarm
