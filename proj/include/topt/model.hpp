#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace topt::model {

// Unicycle state (x, y meters; theta radians, unwrapped) and input
// (forward speed v m/s; angular velocity omega rad/s). Templated on the
// scalar so derivative types can flow through the dynamics unchanged.
template <class T>
struct StateT {
  T x{};
  T y{};
  T theta{};
};

template <class T>
struct ControlT {
  T v{};
  T omega{};
};

using State = StateT<double>;
using Control = ControlT<double>;

// ds/dt = (v cos theta, v sin theta, omega).
template <class T>
StateT<T> unicycle_rhs(const StateT<T>& s, const ControlT<T>& u) {
  using std::cos;
  using std::sin;
  return {u.v * cos(s.theta), u.v * sin(s.theta), u.omega};
}

// One classical RK4 step with the control held constant over dt.
// dt == 0 is the identity map; negative dt is rejected.
template <class T>
StateT<T> rk4_step(const StateT<T>& s, const ControlT<T>& u, const T& dt) {
  if (dt < T(0.0)) {
    throw std::invalid_argument("rk4_step: dt must be non-negative");
  }
  const auto shift = [](const StateT<T>& a, const T& h, const StateT<T>& k) {
    return StateT<T>{a.x + h * k.x, a.y + h * k.y, a.theta + h * k.theta};
  };
  const T half = dt * 0.5;
  const StateT<T> k1 = unicycle_rhs(s, u);
  const StateT<T> k2 = unicycle_rhs(shift(s, half, k1), u);
  const StateT<T> k3 = unicycle_rhs(shift(s, half, k2), u);
  const StateT<T> k4 = unicycle_rhs(shift(s, dt, k3), u);
  const T w = dt / 6.0;
  return {s.x + w * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
          s.y + w * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
          s.theta + w * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta)};
}

// Time grid plus state/control sequences; the exchange object between the
// planner, the feasibility audit and the file formats. Controls are
// zero-order hold over each interval, so there is one fewer than states.
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<Control> controls;

  // Throws std::invalid_argument on shape or monotonicity violations.
  // Equal consecutive timestamps are legal only when allow_equal_times is
  // set (a stage of exactly zero duration).
  void validate(bool allow_equal_times = false) const;

  std::size_t size() const { return times.size(); }
  double duration() const { return times.empty() ? 0.0 : times.back() - times.front(); }
};

// Repeated rk4_step from s0 under the given control sequence; times are
// {0, dt, 2 dt, ...}.
Trajectory rollout(const State& s0, std::span<const Control> controls, double dt);

// Componentwise max-norm distance between two states.
double max_component_distance(const State& a, const State& b);

bool all_finite(const State& s);

}  // namespace topt::model
