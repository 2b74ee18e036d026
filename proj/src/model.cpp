#include "topt/model.hpp"

#include <algorithm>
#include <cmath>

namespace topt::model {

void Trajectory::validate(bool allow_equal_times) const {
  if (times.empty()) {
    throw std::invalid_argument("trajectory: empty time grid");
  }
  if (states.size() != times.size()) {
    throw std::invalid_argument("trajectory: len(states) != len(times)");
  }
  if (controls.size() + 1 != times.size()) {
    throw std::invalid_argument("trajectory: len(controls) != len(times) - 1");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !all_finite(states[i])) {
      throw std::invalid_argument("trajectory: non-finite sample");
    }
    if (i > 0) {
      const double dt = times[i] - times[i - 1];
      if (dt < 0.0 || (dt == 0.0 && !allow_equal_times)) {
        throw std::invalid_argument("trajectory: times must be increasing");
      }
    }
  }
  for (const Control& u : controls) {
    if (!std::isfinite(u.v) || !std::isfinite(u.omega)) {
      throw std::invalid_argument("trajectory: non-finite control");
    }
  }
}

Trajectory rollout(const State& s0, std::span<const Control> controls, double dt) {
  if (dt < 0.0) {
    throw std::invalid_argument("rollout: dt must be non-negative");
  }
  Trajectory traj;
  traj.times.reserve(controls.size() + 1);
  traj.states.reserve(controls.size() + 1);
  traj.controls.assign(controls.begin(), controls.end());
  traj.times.push_back(0.0);
  traj.states.push_back(s0);
  State s = s0;
  for (std::size_t n = 0; n < controls.size(); ++n) {
    s = rk4_step(s, controls[n], dt);
    traj.times.push_back(static_cast<double>(n + 1) * dt);
    traj.states.push_back(s);
  }
  return traj;
}

double max_component_distance(const State& a, const State& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.theta - b.theta)});
}

bool all_finite(const State& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.theta);
}

}  // namespace topt::model
