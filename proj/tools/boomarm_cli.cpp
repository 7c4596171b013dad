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

// Command-line front end: experiment sweep, live service, headless routing
// and the offline error-model and calibration utilities.

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "boomarm/errors.hpp"
#include "boomarm/json_io.hpp"
#include "boomarm/log.hpp"
#include "boomarm/routing.hpp"
#include "boomarm/server.hpp"
#include "boomarm/service.hpp"

namespace fs = std::filesystem;
using namespace boomarm;

namespace {

constexpr int kExitRuntime = 2;

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

AppConfig load_config(const Globals& g) {
  AppConfig cfg = g.config.empty() ? AppConfig{} : load_app_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

fs::path out_dir(const Globals& g) {
  fs::create_directories(g.out);
  return g.out;
}

std::optional<ErrorGrid> load_grid(const AppConfig& cfg, const std::string& override_path) {
  if (!override_path.empty()) return load_error_grid(override_path);
  if (!cfg.grid_path.empty()) return load_error_grid(cfg.grid_path);
  return std::nullopt;
}

ScenarioConfig load_scenario_for(const AppConfig& cfg, const std::string& override_path, MotionPrimitive& prim) {
  if (!override_path.empty() || !cfg.scenario_path.empty()) {
    ScenarioConfig sc = load_scenario(override_path.empty() ? cfg.scenario_path : fs::path(override_path));
    prim = scenario_primitive(sc);
    return sc;
  }
  prim = default_spiral_primitive();
  return default_scenario(prim, cfg.plant);
}

std::vector<std::vector<double>> read_numeric_csv(const fs::path& path, std::size_t width) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
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
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError(path.string() + " row " + std::to_string(row) + ": bad number '" + cell + "'");
      }
    }
    if (v.size() != width) {
      throw FormatError(path.string() + " row " + std::to_string(row) + ": expected " + std::to_string(width) +
                        " columns");
    }
    rows.push_back(std::move(v));
  }
  return rows;
}

TaskTrajectory read_trajectory_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_trajectory_csv(in);
}

int cmd_sweep(const Globals& g, const std::string& spec_name, bool no_trials) {
  AppConfig cfg = load_config(g);
  const SweepSpec spec = spec_name == "paper" ? SweepSpec::paper() : cfg.sweep;
  const fs::path dir = out_dir(g);
  SweepOptions opts;
  if (!no_trials) opts.trial_dir = dir / "trials";
  opts.progress = [](std::size_t done, std::size_t total, const TrialOutcome& o) {
    std::fprintf(stderr, "\r[%zu/%zu] e = %.2f mm%s", done, total, o.e_mm, done == total ? "\n" : "");
  };
  const auto t0 = std::chrono::steady_clock::now();
  const SweepResult r = run_experiment_sweep(spec, cfg, opts);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_error_grid(r.grid, dir / "error_grid.json");
  std::printf("trials: %zu\nwall_time_s: %.1f\ngrid: %s\n", r.trials.size(), wall,
              (dir / "error_grid.json").string().c_str());
  return 0;
}

int cmd_serve(const Globals& g, std::optional<int> port, const std::string& scenario_path,
              const std::string& grid_path) {
  AppConfig cfg = load_config(g);
  if (port) cfg.server.port = *port;
  cfg.server.validate();
  MotionPrimitive prim;
  ScenarioConfig sc = load_scenario_for(cfg, scenario_path, prim);
  auto grid = load_grid(cfg, grid_path);
  if (grid) assign_hook_speeds(sc.hooks, *grid, sc.ebar_mm);
  SimulationServer server(cfg, RoutingSession(sc, prim, cfg.plant, cfg.gains, cfg.seed, cfg.dt), std::move(grid));
  const int bound = server.start(cfg.server.port);
  std::printf("listening on 127.0.0.1:%d\n", bound);
  std::fflush(stdout);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  const ServiceStats stats = server.stats();
  std::ofstream log(out_dir(g) / "events.jsonl");
  server.write_event_log(log);
  std::printf("ticks: %llu overruns: %llu\n", static_cast<unsigned long long>(stats.ticks),
              static_cast<unsigned long long>(stats.overruns));
  return 0;
}

int cmd_route(const Globals& g, const std::string& scenario_path, const std::string& grid_path) {
  AppConfig cfg = load_config(g);
  MotionPrimitive prim;
  ScenarioConfig sc = load_scenario_for(cfg, scenario_path, prim);
  const auto grid = load_grid(cfg, grid_path);
  if (grid) {
    assign_hook_speeds(sc.hooks, *grid, sc.ebar_mm);
  } else {
    warn("no error grid: every hook runs at the primitive's recorded speed");
  }
  const ScenarioResult r = run_headless_scenario(sc, prim, cfg.plant, cfg.gains, cfg.seed, cfg.dt);
  std::printf("%-5s %9s %7s %10s %10s %10s\n", "hook", "theta2", "d3", "s*", "e_pred", "e_meas");
  std::printf("%-5s %9s %7s %10s %10s %10s\n", "", "(deg)", "(m)", "(mm/s)", "(mm)", "(mm)");
  for (const auto& h : r.hooks) {
    char meas[32] = "-", pred[32] = "-";
    if (h.e_meas) std::snprintf(meas, sizeof meas, "%.1f", *h.e_meas);
    if (grid) std::snprintf(pred, sizeof pred, "%.1f", h.e_pred);
    const double s = grid ? h.s_star : prim.nominal_speed;
    std::printf("%-5d %9.0f %7.2f %10.1f %10s %10s\n", h.id, h.theta2_nominal_deg, h.d3_nominal, s, pred, meas);
  }
  std::printf("completed: %s\nsim_time_s: %.2f\n", r.completed ? "yes" : "no", r.sim_time);
  std::ofstream log(out_dir(g) / "route_events.jsonl");
  for (const auto& e : r.events) log << event_to_json(e).dump() << '\n';
  return r.completed ? 0 : kExitRuntime;
}

int cmd_tube(const std::string& ref_path, const std::string& run_path, double spacing_mm, const std::string& csv) {
  const TaskTrajectory ref = read_trajectory_file(ref_path);
  const TaskTrajectory run = read_trajectory_file(run_path);
  std::vector<Vec3> points;
  for (const auto& s : run.samples) points.push_back(s.p);
  // A sampled reference file is already a goal list; resample only on request.
  std::vector<Vec3> goals;
  if (spacing_mm > 0) {
    goals = discretize_reference(ref, spacing_mm / 1000.0);
  } else {
    for (const auto& s : ref.samples) goals.push_back(s.p);
  }
  const TaskTube tube = build_task_tube(goals, points);
  std::printf("e_mm: %.3f\ncoverage: %.3f\n", task_error_p95(tube), tube.coverage);
  if (!csv.empty()) {
    std::ofstream out(csv);
    if (!out) throw FormatError("cannot write " + csv);
    write_tube_csv(out, tube);
  }
  return 0;
}

int cmd_select_speed(const Globals& g, double theta2, double d3, double ebar, const std::string& grid_path) {
  const auto grid = load_grid(load_config(g), grid_path);
  if (!grid) throw InvalidArgument("select-speed needs --grid or an error_grid in the config");
  std::printf("%9s %7s %10s %10s\n", "theta2", "d3", "s*", "e_pred");
  std::printf("%9s %7s %10s %10s\n", "(deg)", "(m)", "(mm/s)", "(mm)");
  try {
    const SpeedSelection s = select_speed(*grid, theta2, d3, ebar);
    std::printf("%9.1f %7.2f %10.1f %10.2f\n", theta2, d3, s.speed_mm_s, s.predicted_error_mm);
    return 0;
  } catch (const InfeasibleSpeedError& e) {
    std::printf("infeasible: no speed reaches %.2f mm; lowest error %.2f mm at %.1f mm/s\n", ebar,
                e.suggestion().predicted_error_mm, e.suggestion().speed_mm_s);
    return kExitRuntime;
  }
}

int cmd_slice(const Globals& g, double theta2, const std::string& grid_path) {
  const auto grid = load_grid(load_config(g), grid_path);
  if (!grid) throw InvalidArgument("slice needs --grid or an error_grid in the config");
  char name[64];
  std::snprintf(name, sizeof name, "slice_theta2_%g.csv", theta2);
  const fs::path path = out_dir(g) / name;
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  export_slice(out, *grid, theta2);
  std::printf("%s\n", path.string().c_str());
  return 0;
}

int cmd_fit_ei(const std::string& path) {
  std::vector<DeflectionSample> samples;
  for (const auto& r : read_numeric_csv(path, 5)) samples.push_back({r[0], r[1], r[2], r[3], r[4]});
  const FlexuralRigidityFit fit = fit_flexural_rigidity(samples);
  std::printf("flexural_rigidity: %.6g\nresidual_rms_m: %.3g\n", fit.flexural_rigidity, fit.residual_rms);
  return 0;
}

int cmd_fit_vibration(const std::string& path) {
  std::vector<TracePoint> trace;
  for (const auto& r : read_numeric_csv(path, 2)) trace.push_back({r[0], r[1]});
  const DampedSinusoidFit fit = fit_damped_sinusoid(trace);
  std::printf("omega_n: %.6g\nzeta: %.6g\namplitude: %.6g\nphase: %.6g\nresidual_rms: %.3g\n", fit.omega_n, fit.zeta,
              fit.amplitude, fit.phase, fit.residual_rms);
  return 0;
}

int cmd_export_defaults(const Globals& g) {
  const fs::path dir = out_dir(g);
  const AppConfig cfg;
  const MotionPrimitive prim = default_spiral_primitive();
  save_primitive_library({prim}, dir / "primitives.json");
  ScenarioConfig sc = default_scenario(prim, cfg.plant);
  sc.primitive_file = "primitives.json";
  save_scenario(sc, dir / "default_scenario.json");
  AppConfig with_paths = cfg;
  with_paths.scenario_path = "default_scenario.json";
  with_paths.grid_path = "table1_fixture_grid.json";
  write_json_file(config_to_json(with_paths), dir / "default_config.json");
  std::printf("wrote primitives.json, default_scenario.json, default_config.json to %s\n", dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boom manipulator simulation, error model and cable routing"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Base random seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  std::string spec_name = "config";
  bool no_trials = false;
  auto* sweep = app.add_subcommand("sweep", "Run the (pitch, length, speed) experiment sweep");
  sweep->add_option("--spec", spec_name, "'paper' for the published axes, 'config' for the config's")
      ->check(CLI::IsMember({"paper", "config"}))
      ->capture_default_str();
  sweep->add_flag("--no-trial-logs", no_trials, "Skip the per-trial CSV logs");

  std::optional<int> port;
  std::string scenario_path, grid_path;
  auto* serve = app.add_subcommand("serve", "Run the live simulation service");
  serve->add_option("--port", port, "TCP port (0 picks a free one)");
  serve->add_option("--scenario", scenario_path, "Scenario JSON")->check(CLI::ExistingFile);
  serve->add_option("--grid", grid_path, "Error grid JSON")->check(CLI::ExistingFile);

  auto* route = app.add_subcommand("route", "Run the routing scenario headless with a scripted operator");
  route->add_option("--scenario", scenario_path, "Scenario JSON")->check(CLI::ExistingFile);
  route->add_option("--grid", grid_path, "Error grid JSON")->check(CLI::ExistingFile);

  std::string ref_path, run_path, tube_csv;
  double spacing_mm = 0.0;
  auto* tube = app.add_subcommand("tube", "Task error of an executed trajectory against a reference");
  tube->add_option("reference", ref_path, "Reference trajectory CSV")->required()->check(CLI::ExistingFile);
  tube->add_option("executed", run_path, "Executed trajectory CSV")->required()->check(CLI::ExistingFile);
  tube->add_option("--spacing-mm", spacing_mm, "Resample the reference into goals this far apart (default: use its rows)")
      ->check(CLI::PositiveNumber);
  tube->add_option("--csv", tube_csv, "Write the tube as CSV");

  double theta2 = 0.0, d3 = 0.0, ebar = 15.0;
  auto* select = app.add_subcommand("select-speed", "Fastest speed whose predicted error stays below ebar");
  select->add_option("--theta2", theta2, "Boom pitch (deg)")->required();
  select->add_option("--d3", d3, "Boom length (m)")->required();
  select->add_option("--ebar", ebar, "Error threshold (mm)")->capture_default_str();
  select->add_option("--grid", grid_path, "Error grid JSON")->check(CLI::ExistingFile);

  auto* slice = app.add_subcommand("slice", "Dense length x speed slice of the grid at one pitch");
  slice->add_option("--theta2", theta2, "Boom pitch (deg)")->required();
  slice->add_option("--grid", grid_path, "Error grid JSON")->check(CLI::ExistingFile);

  std::string data_path;
  auto* fit_ei = app.add_subcommand("fit-ei", "Fit flexural rigidity to sag measurements");
  fit_ei->add_option("samples", data_path, "CSV d3,tip_mass,linear_density,gravity,measured_delta")
      ->required()
      ->check(CLI::ExistingFile);
  auto* fit_vib = app.add_subcommand("fit-vibration", "Fit a damped sinusoid to a tip trace");
  fit_vib->add_option("trace", data_path, "CSV t,value")->required()->check(CLI::ExistingFile);

  auto* defaults = app.add_subcommand("export-defaults", "Write the default config, scenario and primitive files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*sweep) return cmd_sweep(g, spec_name, no_trials);
    if (*serve) return cmd_serve(g, port, scenario_path, grid_path);
    if (*route) return cmd_route(g, scenario_path, grid_path);
    if (*tube) return cmd_tube(ref_path, run_path, spacing_mm, tube_csv);
    if (*select) return cmd_select_speed(g, theta2, d3, ebar, grid_path);
    if (*slice) return cmd_slice(g, theta2, grid_path);
    if (*fit_ei) return cmd_fit_ei(data_path);
    if (*fit_vib) return cmd_fit_vibration(data_path);
    if (*defaults) return cmd_export_defaults(g);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 1;
}
