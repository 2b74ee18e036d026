#include "topt/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace topt::scene {

void EllipseObstacle::validate() const {
  if (!(a_e > 0.0) || !(b_e > 0.0)) {
    throw std::invalid_argument("obstacle: semi-axes must be positive");
  }
  if (!std::isfinite(x_e) || !std::isfinite(y_e) || !std::isfinite(theta_e)) {
    throw std::invalid_argument("obstacle: parameters must be finite");
  }
}

void ControlLimits::validate() const {
  if (!(v_min <= v_max) || !(omega_min <= omega_max)) {
    throw std::invalid_argument("limits: min must not exceed max");
  }
}

void Scene::validate() const {
  limits.validate();
  for (const EllipseObstacle& obs : obstacles) obs.validate();
}

FeasibilityReport audit_trajectory(const model::Trajectory& traj,
                                   std::span<const EllipseObstacle> obstacles,
                                   const ControlLimits& limits, double tol) {
  traj.validate(/*allow_equal_times=*/true);
  limits.validate();
  FeasibilityReport report;
  report.tol = tol;
  report.ellipse_values.reserve(traj.size());

  double first_violation = std::numeric_limits<double>::quiet_NaN();
  const auto note_violation = [&](double t) {
    if (std::isnan(first_violation)) first_violation = t;
  };

  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    double worst = obstacles.empty() ? 0.0 : -std::numeric_limits<double>::infinity();
    for (const EllipseObstacle& obs : obstacles) {
      worst = std::max(worst, ellipse_constraint(traj.states[i], obs));
    }
    report.ellipse_values.push_back(worst);
    const double viol = std::max(0.0, worst);
    report.max_ellipse_violation = std::max(report.max_ellipse_violation, viol);
    if (viol > tol) note_violation(traj.times[i]);
  }
  for (std::size_t i = 0; i < traj.controls.size(); ++i) {
    const model::Control& u = traj.controls[i];
    const double dv = std::max({limits.v_min - u.v, u.v - limits.v_max, 0.0});
    const double dw =
        std::max({limits.omega_min - u.omega, u.omega - limits.omega_max, 0.0});
    report.max_v_violation = std::max(report.max_v_violation, dv);
    report.max_omega_violation = std::max(report.max_omega_violation, dw);
    if (dv > tol || dw > tol) note_violation(traj.times[i]);
  }
  report.worst_time = first_violation;
  return report;
}

FeasibilityReport audit_trajectory(const model::Trajectory& traj, const Scene& scene,
                                   double tol) {
  return audit_trajectory(traj, scene.obstacles, scene.limits, tol);
}

namespace {

std::vector<double> make_grid(double t0, double t_end, double t_s) {
  std::vector<double> grid;
  grid.push_back(t0);
  // Guard against a fractional final step shorter than rounding noise.
  const double eps = 1e-9 * std::max(1.0, std::abs(t_end));
  for (int k = 1;; ++k) {
    const double t = t0 + k * t_s;
    if (t >= t_end - eps) break;
    grid.push_back(t);
  }
  if (t_end > t0) grid.push_back(t_end);
  return grid;
}

// Index of the interval [times[j], times[j+1]) containing t.
std::size_t locate(const std::vector<double>& times, double t) {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t j = it == times.begin() ? 0 : (it - times.begin()) - 1;
  return std::min(j, times.size() - 2);
}

}  // namespace

model::Trajectory resample_linear(const model::Trajectory& traj, double t_s) {
  if (traj.size() < 2) {
    throw std::invalid_argument("resample_linear: need at least 2 samples");
  }
  if (!(t_s > 0.0)) {
    throw std::invalid_argument("resample_linear: t_s must be positive");
  }
  traj.validate();

  const std::vector<double> grid = make_grid(traj.times.front(), traj.times.back(), t_s);
  // Already on the requested grid: hand back the input untouched.
  if (grid.size() == traj.times.size()) {
    bool same = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (std::abs(grid[i] - traj.times[i]) > 1e-12) {
        same = false;
        break;
      }
    }
    if (same) return traj;
  }

  model::Trajectory out;
  out.times = grid;
  out.states.reserve(grid.size());
  out.controls.reserve(grid.size() - 1);
  for (double t : grid) {
    const std::size_t j = locate(traj.times, t);
    const double span = traj.times[j + 1] - traj.times[j];
    const double a = span > 0.0 ? std::clamp((t - traj.times[j]) / span, 0.0, 1.0) : 0.0;
    const model::State& s0 = traj.states[j];
    const model::State& s1 = traj.states[j + 1];
    out.states.push_back({s0.x + a * (s1.x - s0.x), s0.y + a * (s1.y - s0.y),
                          s0.theta + a * (s1.theta - s0.theta)});
  }
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    out.controls.push_back(traj.controls[locate(traj.times, grid[k])]);
  }
  // Endpoints are preserved exactly.
  out.states.front() = traj.states.front();
  out.states.back() = traj.states.back();
  return out;
}

model::Trajectory simulate_with_resampled_controls(const model::Trajectory& traj,
                                                   double t_s) {
  const model::Trajectory resampled = resample_linear(traj, t_s);
  model::Trajectory out;
  out.times = resampled.times;
  out.controls = resampled.controls;
  out.states.reserve(out.times.size());
  out.states.push_back(traj.states.front());
  model::State s = traj.states.front();
  for (std::size_t k = 0; k + 1 < out.times.size(); ++k) {
    const double dt = out.times[k + 1] - out.times[k];
    s = model::rk4_step(s, out.controls[k], dt);
    out.states.push_back(s);
  }
  return out;
}

model::Trajectory clip_to_time(const model::Trajectory& traj, double t_max) {
  traj.validate(/*allow_equal_times=*/true);
  model::Trajectory out;
  const double cutoff = t_max + 1e-12 * std::max(1.0, std::abs(t_max));
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    if (i > 0 && traj.times[i] > cutoff) break;
    out.times.push_back(traj.times[i]);
    out.states.push_back(traj.states[i]);
    if (i > 0) out.controls.push_back(traj.controls[i - 1]);
  }
  return out;
}

}  // namespace topt::scene
