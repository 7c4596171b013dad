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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "boomarm/errors.hpp"
#include "boomarm/plant.hpp"

namespace boomarm {

namespace {

struct Model {
  double omega, zeta, amp, phase;
};

double model_value(const Model& m, double t) {
  const double root = std::sqrt(1.0 - m.zeta * m.zeta);
  return m.amp * std::exp(-m.zeta * m.omega * t) * std::sin(m.omega * root * t + m.phase);
}

double sum_squares(std::span<const TracePoint> trace, const Model& m) {
  double acc = 0.0;
  for (const auto& p : trace) {
    const double r = p.value - model_value(m, p.t);
    acc += r * r;
  }
  return acc;
}

// Crossing times found with a hysteresis band so noise near zero does not
// register as extra half-cycles. Each crossing is placed at the last raw sign
// change before the signal leaves the band on the other side.
std::vector<double> zero_crossings(std::span<const TracePoint> trace, double band) {
  std::vector<double> out;
  int armed = 0;
  double last_change = trace.front().t;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i > 0) {
      const double a = trace[i - 1].value, b = trace[i].value;
      if ((a < 0) != (b < 0) && a != b) {
        last_change = trace[i - 1].t + (trace[i].t - trace[i - 1].t) * a / (a - b);
      }
    }
    const double v = trace[i].value;
    const int side = v > band ? 1 : (v < -band ? -1 : 0);
    if (side == 0) continue;
    if (armed != 0 && side != armed) out.push_back(last_change);
    armed = side;
  }
  return out;
}

Model initial_guess(std::span<const TracePoint> trace) {
  double peak = 0.0;
  for (const auto& p : trace) peak = std::max(peak, std::abs(p.value));
  const std::vector<double> crossings = zero_crossings(trace, 0.1 * peak);
  if (crossings.size() < 3) throw DegenerateFitError("trace does not oscillate");
  const double half_period =
      (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
  if (!(half_period > 0)) throw DegenerateFitError("trace does not oscillate");
  const double wd = std::numbers::pi / half_period;

  // Logarithmic decrement from the envelope peak of each half-cycle.
  std::vector<double> pt, pl;
  for (std::size_t c = 0; c + 1 < crossings.size(); ++c) {
    double best = 0.0, best_t = 0.0;
    for (const auto& p : trace) {
      if (p.t < crossings[c] || p.t > crossings[c + 1]) continue;
      if (std::abs(p.value) > best) {
        best = std::abs(p.value);
        best_t = p.t;
      }
    }
    if (best > 0) {
      pt.push_back(best_t);
      pl.push_back(std::log(best));
    }
  }
  double sigma = 0.0;
  if (pt.size() >= 2) {
    const double n = static_cast<double>(pt.size());
    double st = 0, sl = 0, stt = 0, stl = 0;
    for (std::size_t i = 0; i < pt.size(); ++i) {
      st += pt[i];
      sl += pl[i];
      stt += pt[i] * pt[i];
      stl += pt[i] * pl[i];
    }
    const double den = n * stt - st * st;
    if (den > 0) sigma = std::max(-(n * stl - st * sl) / den, 0.0);
  }
  const double omega = std::sqrt(wd * wd + sigma * sigma);
  const double zeta = std::min(sigma / omega, 0.9);

  // Amplitude and phase by linear least squares with the rate terms fixed.
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(trace.size()), 2);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(trace.size()));
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double e = std::exp(-sigma * trace[i].t);
    const auto r = static_cast<Eigen::Index>(i);
    basis(r, 0) = e * std::sin(wd * trace[i].t);
    basis(r, 1) = e * std::cos(wd * trace[i].t);
    rhs[r] = trace[i].value;
  }
  const Eigen::Vector2d c = basis.colPivHouseholderQr().solve(rhs);
  return {omega, zeta, std::hypot(c[0], c[1]), std::atan2(c[1], c[0])};
}

DampedSinusoidFit to_fit(const Model& m, double ss, std::size_t n, int iterations) {
  DampedSinusoidFit f;
  f.omega_n = m.omega;
  f.zeta = m.zeta;
  f.amplitude = std::abs(m.amp);
  f.phase = std::remainder(m.amp < 0 ? m.phase + std::numbers::pi : m.phase, 2.0 * std::numbers::pi);
  f.residual_rms = std::sqrt(ss / static_cast<double>(n));
  f.iterations = iterations;
  return f;
}

}  // namespace

DampedSinusoidFit fit_damped_sinusoid(std::span<const TracePoint> trace, int max_iterations) {
  if (trace.size() < 8) throw DegenerateFitError("too few samples for a damped sinusoid fit");
  if (max_iterations < 1) throw InvalidArgument("max_iterations must be positive");
  double lo = trace.front().value, hi = lo;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& p = trace[i];
    if (!std::isfinite(p.t) || !std::isfinite(p.value)) {
      throw InvalidArgument("trace contains non-finite samples");
    }
    if (i > 0 && !(p.t > trace[i - 1].t)) throw InvalidArgument("trace times must increase");
    lo = std::min(lo, p.value);
    hi = std::max(hi, p.value);
  }
  if (!(hi > lo)) throw DegenerateFitError("constant trace");

  Model m = initial_guess(trace);
  double ss = sum_squares(trace, m);
  double lambda = 1e-3;
  const auto n = static_cast<Eigen::Index>(trace.size());

  for (int iter = 1; iter <= max_iterations; ++iter) {
    Eigen::MatrixXd jac(n, 4);
    Eigen::VectorXd res(n);
    const double root = std::sqrt(1.0 - m.zeta * m.zeta);
    const double wd = m.omega * root;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = trace[static_cast<std::size_t>(i)].t;
      const double e = std::exp(-m.zeta * m.omega * t);
      const double s = std::sin(wd * t + m.phase), c = std::cos(wd * t + m.phase);
      res[i] = trace[static_cast<std::size_t>(i)].value - m.amp * e * s;
      jac(i, 0) = m.amp * e * t * (-m.zeta * s + root * c);
      jac(i, 1) = m.amp * e * t * m.omega * (-s - m.zeta / root * c);
      jac(i, 2) = e * s;
      jac(i, 3) = m.amp * e * c;
    }
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    const Eigen::Vector4d grad = jac.transpose() * res;
    if (grad.lpNorm<Eigen::Infinity>() <= 1e-14 * std::max(1.0, ss) || ss == 0.0) {
      return to_fit(m, ss, trace.size(), iter);
    }

    bool accepted = false;
    while (!accepted) {
      Eigen::Matrix4d a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Vector4d step = a.ldlt().solve(grad);
      Model trial{m.omega + step[0], std::clamp(m.zeta + step[1], 0.0, 0.999), m.amp + step[2],
                  m.phase + step[3]};
      if (trial.omega > 0 && step.allFinite()) {
        const double trial_ss = sum_squares(trace, trial);
        if (trial_ss < ss) {
          const double drop = (ss - trial_ss) / ss;
          const double rel_step =
              step.cwiseAbs().cwiseQuotient(Eigen::Vector4d(m.omega, 1.0, std::abs(m.amp) + 1e-300, 1.0))
                  .maxCoeff();
          m = trial;
          ss = trial_ss;
          lambda = std::max(lambda / 10.0, 1e-12);
          accepted = true;
          if (drop < 1e-12 || rel_step < 1e-12) return to_fit(m, ss, trace.size(), iter);
          continue;
        }
      }
      lambda *= 10.0;
      // No descent direction left at this precision: a local minimum.
      if (lambda > 1e12) return to_fit(m, ss, trace.size(), iter);
    }
  }
  throw FitConvergenceError("damped sinusoid fit did not converge", to_fit(m, ss, trace.size(), max_iterations));
}

}  // namespace boomarm
