#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "topt/model.hpp"

namespace topt::scene {

// Elliptical keep-out region: center (x_e, y_e), semi-axes a_e/b_e, rotated
// by theta_e. The robot is a point; the ellipse is the whole forbidden set.
struct EllipseObstacle {
  double x_e = 0.0;
  double y_e = 0.0;
  double a_e = 1.0;
  double b_e = 1.0;
  double theta_e = 0.0;

  void validate() const;
};

struct ControlLimits {
  double v_min = 0.0;
  double v_max = 0.5;
  double omega_min = -1.0;
  double omega_max = 1.0;

  void validate() const;
};

struct Scene {
  std::vector<EllipseObstacle> obstacles;
  ControlLimits limits;

  void validate() const;
};

// Collision constraint value: 1 - p'^T Omega p' with p' the offset from the
// ellipse center expressed in the ellipse frame. Non-positive means
// collision-free; 1 at the center, 0 on the boundary.
template <class T>
T ellipse_constraint(const model::StateT<T>& s, const EllipseObstacle& e) {
  const double c = std::cos(e.theta_e);
  const double sn = std::sin(e.theta_e);
  const T dx = s.x - e.x_e;
  const T dy = s.y - e.y_e;
  const T bx = c * dx + sn * dy;
  const T by = -sn * dx + c * dy;
  return T(1.0) - bx * bx / (e.a_e * e.a_e) - by * by / (e.b_e * e.b_e);
}

struct FeasibilityReport {
  double max_ellipse_violation = 0.0;  // positive part of the constraint
  double max_v_violation = 0.0;        // m/s beyond [v_min, v_max]
  double max_omega_violation = 0.0;    // rad/s beyond [omega_min, omega_max]
  // Timestamp of the first sample violating beyond tol; NaN when clean.
  double worst_time = std::numeric_limits<double>::quiet_NaN();
  double tol = 1e-6;
  // Per-state-sample constraint value, max over obstacles (-inf-free; zero
  // when the scene has no obstacles).
  std::vector<double> ellipse_values;

  bool feasible() const {
    return max_ellipse_violation <= tol && max_v_violation <= tol &&
           max_omega_violation <= tol;
  }
};

// Evaluates the ellipse constraint at every state sample and the control
// limits at every control sample.
FeasibilityReport audit_trajectory(const model::Trajectory& traj,
                                   std::span<const EllipseObstacle> obstacles,
                                   const ControlLimits& limits, double tol = 1e-6);

FeasibilityReport audit_trajectory(const model::Trajectory& traj, const Scene& scene,
                                   double tol = 1e-6);

// States linearly interpolated onto {t0, t0+t_s, ...}; when the total
// duration is not a multiple of t_s the final grid point is the original end
// time (shortened last step). Controls are zero-order hold samples of the
// original piecewise-constant inputs. A trajectory already on the grid is
// returned unchanged.
model::Trajectory resample_linear(const model::Trajectory& traj, double t_s);

// Zero-order-hold controls on the t_s grid integrated forward from the
// trajectory's first state; exposes the dynamic consistency of an
// interpolated plan.
model::Trajectory simulate_with_resampled_controls(const model::Trajectory& traj,
                                                   double t_s);

// Samples with t <= t_max (at least the first sample is kept).
model::Trajectory clip_to_time(const model::Trajectory& traj, double t_max);

}  // namespace topt::scene
