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
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "boomarm/errors.hpp"
#include "boomarm/log.hpp"
#include "boomarm/service.hpp"

namespace boomarm {

namespace {

std::string trial_name(const SweepSpec& spec, const TrialOutcome& o) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "trial_p%g_d%g_s%g_r%d.csv", spec.theta2_deg[o.i], spec.d3_m[o.j],
                spec.speed_mm_s[o.k], o.rep);
  return buf;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t base_seed, int rep) {
  return base_seed * 1000ULL + static_cast<std::uint64_t>(rep);
}

TrialRun run_square_trial(const AppConfig& cfg, double theta2_deg, double d3, double speed_mm_s,
                          std::uint64_t seed, double side, double settle_time) {
  TrialRun run;
  run.outcome.seed = seed;
  const JointConfig q0{0.0, theta2_deg * std::numbers::pi / 180.0, d3, 0.0, 0.5, 0.0};
  PlantState s = make_plant_state(q0, cfg.plant, seed);
  const Vec3 start = true_tool_pose(s, cfg.plant).translation;
  run.reference = generate_square_trajectory(side, speed_mm_s / 1000.0, cfg.dt, vertical_square_plane(start));
  ServoLoop loop(run.reference, cfg.gains, seed ^ 0x5eed5eed5eedULL);
  const double t_end = run.reference.end_time() + settle_time;
  const auto steps = static_cast<long>(std::ceil(t_end / cfg.dt - 1e-9));
  run.t.reserve(static_cast<std::size_t>(steps));
  run.path.reserve(static_cast<std::size_t>(steps));
  try {
    for (long n = 0; n < steps; ++n) {
      s = step_plant(s, loop.step(s, cfg.plant, s.t), cfg.plant, cfg.dt);
      const Vec3 p = true_tool_pose(s, cfg.plant).translation;
      if (!p.allFinite() || (p - run.reference.at(s.t).p).norm() > kDivergenceLimit) {
        throw std::runtime_error("tracking diverged");
      }
      run.t.push_back(s.t);
      run.path.push_back(p);
    }
    const TaskTube tube = build_task_tube(discretize_reference(run.reference), run.path);
    run.outcome.coverage = tube.coverage;
    run.outcome.e_mm = task_error_p95(tube);
  } catch (const std::exception& e) {
    run.outcome.failed = true;
    run.outcome.failure = e.what();
  }
  return run;
}

void write_trial_csv(std::ostream& out, const TrialRun& run) {
  out << "t,ref_x,ref_y,ref_z,x,y,z\n";
  char buf[256];
  for (std::size_t n = 0; n < run.path.size(); ++n) {
    const Vec3 r = run.reference.at(run.t[n]).p;
    const Vec3& p = run.path[n];
    std::snprintf(buf, sizeof buf, "%.4f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", run.t[n], r.x(), r.y(), r.z(), p.x(),
                  p.y(), p.z());
    out << buf;
  }
}

SweepResult run_experiment_sweep(const SweepSpec& spec, const AppConfig& cfg, const SweepOptions& opts) {
  spec.validate();
  cfg.plant.validate();
  cfg.gains.validate();
  if (opts.trial_dir) std::filesystem::create_directories(*opts.trial_dir);

  SweepResult result;
  result.grid = ErrorGrid::with_axes(spec.theta2_deg, spec.d3_m, spec.speed_mm_s);
  const std::size_t total = spec.trial_count();
  std::size_t failed_total = 0;
  for (std::size_t i = 0; i < spec.theta2_deg.size(); ++i) {
    for (std::size_t j = 0; j < spec.d3_m.size(); ++j) {
      for (std::size_t k = 0; k < spec.speed_mm_s.size(); ++k) {
        double sum = 0.0, worst = 0.0;
        int ok = 0;
        for (int rep = 0; rep < spec.repetitions; ++rep) {
          TrialRun run = run_square_trial(cfg, spec.theta2_deg[i], spec.d3_m[j], spec.speed_mm_s[k],
                                          trial_seed(cfg.seed, rep), spec.square_side, spec.settle_time);
          TrialOutcome& o = run.outcome;
          o.i = i;
          o.j = j;
          o.k = k;
          o.rep = rep;
          if (o.failed) {
            ++failed_total;
            std::ostringstream msg;
            msg << "trial (" << spec.theta2_deg[i] << " deg, " << spec.d3_m[j] << " m, " << spec.speed_mm_s[k]
                << " mm/s, rep " << rep << ") failed: " << o.failure;
            warn(msg.str());
          } else {
            sum += o.e_mm;
            worst = std::max(worst, o.e_mm);
            ++ok;
          }
          if (opts.trial_dir) {
            std::ofstream out(*opts.trial_dir / trial_name(spec, o), std::ios::binary);
            if (!out) throw FormatError("cannot write trial log in " + opts.trial_dir->string());
            write_trial_csv(out, run);
          }
          result.trials.push_back(o);
          if (opts.progress) opts.progress(result.trials.size(), total, o);
        }
        if (ok == 0) {
          std::ostringstream msg;
          msg << "every trial failed at (" << spec.theta2_deg[i] << " deg, " << spec.d3_m[j] << " m, "
              << spec.speed_mm_s[k] << " mm/s)";
          throw NoDataError(msg.str());
        }
        result.grid.at(i, j, k) = spec.aggregate == SweepSpec::Aggregate::kMax ? worst : sum / ok;
      }
    }
  }
  result.grid.meta = {{"seed", cfg.seed},
                      {"repetitions", spec.repetitions},
                      {"square_side_m", spec.square_side},
                      {"dt", cfg.dt},
                      {"aggregate", spec.aggregate == SweepSpec::Aggregate::kMax ? "max" : "mean"},
                      {"failed_trials", failed_total}};
  return result;
}

}  // namespace boomarm
