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

#include "boomarm/errormodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "boomarm/errors.hpp"
#include "boomarm/log.hpp"

namespace boomarm {

namespace {

// Static 3-d tree over the goal points. Nearest queries order candidates by
// (squared distance, index) so ties resolve to the lowest goal index.
class GoalTree {
 public:
  explicit GoalTree(const std::vector<Vec3>& pts) : pts_(pts), order_(pts.size()) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(pts.size());
    root_ = build(0, order_.size(), 0);
  }

  std::size_t nearest(const Vec3& q, double& best_d2) const {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    best_d2 = std::numeric_limits<double>::infinity();
    search(root_, q, best, best_d2);
    return best;
  }

 private:
  struct Node {
    std::size_t point;
    int axis;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t lo, std::size_t hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 3;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(lo),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::size_t a, std::size_t b) {
                       const double pa = pts_[a][axis], pb = pts_[b][axis];
                       return pa < pb || (pa == pb && a < b);
                     });
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({order_[mid], axis});
    const int left = build(lo, mid, depth + 1);
    const int right = build(mid + 1, hi, depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  void search(int id, const Vec3& q, std::size_t& best, double& best_d2) const {
    if (id < 0) return;
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const double d2 = (q - pts_[n.point]).squaredNorm();
    if (d2 < best_d2 || (d2 == best_d2 && n.point < best)) {
      best_d2 = d2;
      best = n.point;
    }
    const double diff = q[n.axis] - pts_[n.point][n.axis];
    const int near = diff < 0 ? n.left : n.right;
    const int far = diff < 0 ? n.right : n.left;
    search(near, q, best, best_d2);
    if (diff * diff <= best_d2) search(far, q, best, best_d2);
  }

  const std::vector<Vec3>& pts_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Cell index and fraction along one clamped axis.
void locate(const std::vector<double>& axis, double v, std::size_t& i, double& frac) {
  if (axis.size() == 1) {
    i = 0;
    frac = 0.0;
    return;
  }
  v = std::clamp(v, axis.front(), axis.back());
  const auto it = std::upper_bound(axis.begin(), axis.end(), v);
  i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - axis.begin() - 1, 0));
  i = std::min(i, axis.size() - 2);
  frac = (v - axis[i]) / (axis[i + 1] - axis[i]);
}

void check_axis(const std::vector<double>& axis, const char* name) {
  if (axis.empty()) throw InvalidArgument(std::string("error grid axis ") + name + " is empty");
  for (std::size_t i = 0; i < axis.size(); ++i) {
    if (!std::isfinite(axis[i])) throw InvalidArgument(std::string("error grid axis ") + name + " is not finite");
    if (i > 0 && !(axis[i] > axis[i - 1])) {
      throw InvalidArgument(std::string("error grid axis ") + name + " must strictly increase");
    }
  }
}

std::vector<double> read_axis(const nlohmann::json& axes, const char* name) {
  if (!axes.contains(name) || !axes[name].is_array()) {
    throw FormatError(std::string("error grid: missing axis '") + name + "'");
  }
  std::vector<double> out;
  for (const auto& v : axes[name]) {
    if (!v.is_number()) throw FormatError(std::string("error grid: non-numeric entry in axis '") + name + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::vector<Vec3> discretize_reference(const TaskTrajectory& traj, double spacing) {
  if (!(spacing > 0)) throw InvalidArgument("goal spacing must be positive");
  if (traj.samples.empty()) throw InvalidArgument("cannot discretise an empty trajectory");
  const auto& s = traj.samples;
  std::vector<double> arc(s.size(), 0.0);
  for (std::size_t i = 1; i < s.size(); ++i) arc[i] = arc[i - 1] + (s[i].p - s[i - 1].p).norm();
  const double length = arc.back();
  std::vector<Vec3> goals;
  goals.push_back(s.front().p);
  if (!(length > 0)) return goals;

  const double eps = 1e-9 * spacing;
  const auto count = static_cast<long>(std::floor(length / spacing + 1e-9));
  std::size_t seg = 1;
  for (long k = 1; k <= count; ++k) {
    const double target = std::min(static_cast<double>(k) * spacing, length);
    while (seg + 1 < s.size() && arc[seg] < target) ++seg;
    const double span = arc[seg] - arc[seg - 1];
    const double u = span > 0 ? std::clamp((target - arc[seg - 1]) / span, 0.0, 1.0) : 1.0;
    goals.push_back(s[seg - 1].p + u * (s[seg].p - s[seg - 1].p));
  }
  if (length - static_cast<double>(count) * spacing > eps) goals.push_back(s.back().p);
  const bool closed = (s.front().p - s.back().p).norm() <= eps;
  if (closed && goals.size() > 1 && (goals.back() - goals.front()).norm() <= eps) goals.pop_back();
  return goals;
}

TaskTube build_task_tube(const std::vector<Vec3>& goals, const std::vector<Vec3>& points) {
  if (goals.empty()) throw InvalidArgument("task tube needs at least one goal");
  TaskTube tube;
  tube.goals = goals;
  tube.radii.assign(goals.size(), 0.0);
  tube.covered.assign(goals.size(), false);
  const GoalTree tree(tube.goals);
  for (const Vec3& p : points) {
    if (!p.allFinite()) throw InvalidArgument("task tube point is not finite");
    double d2 = 0.0;
    const std::size_t i = tree.nearest(p, d2);
    tube.covered[i] = true;
    tube.radii[i] = std::max(tube.radii[i], std::sqrt(d2));
  }
  const auto n = std::count(tube.covered.begin(), tube.covered.end(), true);
  tube.coverage = static_cast<double>(n) / static_cast<double>(goals.size());
  return tube;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw NoDataError("percentile of an empty set");
  if (!(q >= 0 && q <= 1)) throw InvalidArgument("percentile rank must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double task_error_p95(const TaskTube& tube) {
  std::vector<double> r;
  for (std::size_t i = 0; i < tube.radii.size(); ++i) {
    if (tube.covered[i]) r.push_back(tube.radii[i]);
  }
  if (r.empty()) throw NoDataError("task tube has no covered goals");
  if (tube.coverage < 0.9) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "task tube coverage %.3f is below 0.9", tube.coverage);
    warn(buf);
  }
  return 1000.0 * percentile(std::move(r), 0.95);
}

void write_tube_csv(std::ostream& out, const TaskTube& tube) {
  out << "gx,gy,gz,radius_m,covered\n";
  char buf[160];
  for (std::size_t i = 0; i < tube.goals.size(); ++i) {
    const Vec3& g = tube.goals[i];
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%d\n", g.x(), g.y(), g.z(), tube.radii[i],
                  tube.covered[i] ? 1 : 0);
    out << buf;
  }
}

void ErrorGrid::validate() const {
  check_axis(theta2_deg, "theta2_deg");
  check_axis(d3_m, "d3_m");
  check_axis(speed_mm_s, "speed_mm_s");
  if (e_mm.size() != theta2_deg.size() * d3_m.size() * speed_mm_s.size()) {
    throw InvalidArgument("error grid values do not match its axes");
  }
  for (double v : e_mm) {
    if (!std::isfinite(v) || v < 0) throw InvalidArgument("error grid values must be finite and >= 0");
  }
}

ErrorGrid ErrorGrid::with_axes(std::vector<double> theta2_deg, std::vector<double> d3_m,
                               std::vector<double> speed_mm_s) {
  ErrorGrid g;
  g.theta2_deg = std::move(theta2_deg);
  g.d3_m = std::move(d3_m);
  g.speed_mm_s = std::move(speed_mm_s);
  g.e_mm.assign(g.theta2_deg.size() * g.d3_m.size() * g.speed_mm_s.size(), 0.0);
  return g;
}

nlohmann::json to_json(const ErrorGrid& grid) {
  nlohmann::json j;
  j["axes"] = {{"theta2_deg", grid.theta2_deg}, {"d3_m", grid.d3_m}, {"speed_mm_s", grid.speed_mm_s}};
  nlohmann::json values = nlohmann::json::array();
  for (std::size_t i = 0; i < grid.theta2_deg.size(); ++i) {
    nlohmann::json plane = nlohmann::json::array();
    for (std::size_t k = 0; k < grid.d3_m.size(); ++k) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t s = 0; s < grid.speed_mm_s.size(); ++s) row.push_back(grid.at(i, k, s));
      plane.push_back(std::move(row));
    }
    values.push_back(std::move(plane));
  }
  j["e_mm"] = std::move(values);
  j["meta"] = grid.meta;
  return j;
}

ErrorGrid error_grid_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("axes") || !j["axes"].is_object()) {
    throw FormatError("error grid: missing 'axes' object");
  }
  ErrorGrid g = ErrorGrid::with_axes(read_axis(j["axes"], "theta2_deg"), read_axis(j["axes"], "d3_m"),
                                     read_axis(j["axes"], "speed_mm_s"));
  if (!j.contains("e_mm") || !j["e_mm"].is_array()) throw FormatError("error grid: missing 'e_mm' array");
  const auto& v = j["e_mm"];
  if (v.size() != g.theta2_deg.size()) throw FormatError("error grid: e_mm pitch dimension mismatch");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != g.d3_m.size()) {
      throw FormatError("error grid: e_mm length dimension mismatch");
    }
    for (std::size_t k = 0; k < v[i].size(); ++k) {
      const auto& row = v[i][k];
      if (!row.is_array() || row.size() != g.speed_mm_s.size()) {
        throw FormatError("error grid: e_mm speed dimension mismatch");
      }
      for (std::size_t s = 0; s < row.size(); ++s) {
        if (!row[s].is_number()) throw FormatError("error grid: non-numeric value");
        g.at(i, k, s) = row[s].get<double>();
      }
    }
  }
  if (j.contains("meta")) g.meta = j["meta"];
  try {
    g.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("error grid: ") + e.what());
  }
  return g;
}

ErrorGrid load_error_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open error grid file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("error grid " + path.string() + ": " + e.what());
  }
  return error_grid_from_json(j);
}

void save_error_grid(const ErrorGrid& grid, const std::filesystem::path& path) {
  grid.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write error grid file " + path.string());
  out << to_json(grid).dump(2) << '\n';
}

double interpolate_error(const ErrorGrid& grid, double theta2_deg, double d3_m, double speed_mm_s) {
  if (grid.e_mm.empty()) throw InvalidArgument("error grid is empty");
  std::size_t i, j, k;
  double ti, tj, tk;
  locate(grid.theta2_deg, theta2_deg, i, ti);
  locate(grid.d3_m, d3_m, j, tj);
  locate(grid.speed_mm_s, speed_mm_s, k, tk);
  const std::size_t i1 = std::min(i + 1, grid.theta2_deg.size() - 1);
  const std::size_t j1 = std::min(j + 1, grid.d3_m.size() - 1);
  const std::size_t k1 = std::min(k + 1, grid.speed_mm_s.size() - 1);
  double acc = 0.0;
  for (int a = 0; a < 2; ++a) {
    const double wa = a ? ti : 1.0 - ti;
    if (wa == 0.0) continue;
    for (int b = 0; b < 2; ++b) {
      const double wb = b ? tj : 1.0 - tj;
      if (wb == 0.0) continue;
      for (int c = 0; c < 2; ++c) {
        const double wc = c ? tk : 1.0 - tk;
        if (wc == 0.0) continue;
        acc += wa * wb * wc * grid.at(a ? i1 : i, b ? j1 : j, c ? k1 : k);
      }
    }
  }
  return acc;
}

SpeedSelection select_speed(const ErrorGrid& grid, double theta2_deg, double d3_m, double e_bar_mm,
                            double speed_min_mm_s, double speed_max_mm_s) {
  if (!(e_bar_mm > 0)) throw InvalidArgument("error threshold must be positive");
  if (!std::isfinite(theta2_deg) || !std::isfinite(d3_m)) throw InvalidArgument("query is not finite");
  if (!(speed_max_mm_s >= speed_min_mm_s)) throw InvalidArgument("speed range is empty");
  const double lo = std::clamp(speed_min_mm_s, grid.speed_mm_s.front(), grid.speed_mm_s.back());
  const double hi = std::clamp(speed_max_mm_s, grid.speed_mm_s.front(), grid.speed_mm_s.back());
  SpeedSelection best_feasible{-1.0, 0.0};
  SpeedSelection lowest{lo, std::numeric_limits<double>::infinity()};
  auto consider = [&](double s) {
    const double e = interpolate_error(grid, theta2_deg, d3_m, s);
    if (e < lowest.predicted_error_mm) lowest = {s, e};
    if (e <= e_bar_mm && s > best_feasible.speed_mm_s) best_feasible = {s, e};
  };
  for (long n = 0;; ++n) {
    const double s = lo + static_cast<double>(n) * kSpeedScanStep;
    if (s > hi) break;
    consider(s);
  }
  consider(hi);
  if (best_feasible.speed_mm_s < 0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "no speed keeps predicted error under %.3g mm; lowest is %.3g mm at %.3g mm/s",
                  e_bar_mm, lowest.predicted_error_mm, lowest.speed_mm_s);
    throw InfeasibleSpeedError(buf, lowest);
  }
  return best_feasible;
}

SpeedSelection select_speed(const ErrorGrid& grid, double theta2_deg, double d3_m, double e_bar_mm) {
  return select_speed(grid, theta2_deg, d3_m, e_bar_mm, grid.speed_mm_s.front(), grid.speed_mm_s.back());
}

void export_slice(std::ostream& out, const ErrorGrid& grid, double theta2_deg) {
  grid.validate();
  out << "theta2_deg,d3_m,speed_mm_s,e_mm\n";
  auto sample = [](const std::vector<double>& axis, int n) {
    if (axis.size() == 1) return axis.front();
    return axis.front() + (axis.back() - axis.front()) * n / (kSliceResolution - 1);
  };
  char buf[128];
  for (int a = 0; a < kSliceResolution; ++a) {
    const double d3 = sample(grid.d3_m, a);
    for (int b = 0; b < kSliceResolution; ++b) {
      const double s = sample(grid.speed_mm_s, b);
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g\n", theta2_deg, d3, s,
                    interpolate_error(grid, theta2_deg, d3, s));
      out << buf;
    }
  }
}

}  // namespace boomarm
