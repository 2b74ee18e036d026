#include "topt/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace topt::ocp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class S>
using CSpan = nlp::CSpan<S>;
template <class S>
using MSpan = nlp::MSpan<S>;

// out = rk4(s, u, dt) - s_next, reading [s(3), u(2), s_next(3)].
struct FixedStepDefect {
  double dt;

  template <class S>
  void operator()(CSpan<S> in, MSpan<S> out) const {
    const model::StateT<S> s{in[0], in[1], in[2]};
    const model::ControlT<S> u{in[3], in[4]};
    const model::StateT<S> next = model::rk4_step(s, u, S(dt));
    out[0] = next.x - in[5];
    out[1] = next.y - in[6];
    out[2] = next.theta - in[7];
  }
};

// Same with dt = T / steps, reading [T, s(3), u(2), s_next(3)].
struct ScaledStepDefect {
  double inv_steps;

  template <class S>
  void operator()(CSpan<S> in, MSpan<S> out) const {
    const S dt = in[0] * inv_steps;
    const model::StateT<S> s{in[1], in[2], in[3]};
    const model::ControlT<S> u{in[4], in[5]};
    const model::StateT<S> next = model::rk4_step(s, u, dt);
    out[0] = next.x - in[6];
    out[1] = next.y - in[7];
    out[2] = next.theta - in[8];
  }
};

// out = s - target, reading [s(3)].
struct PinState {
  model::State target;

  template <class S>
  void operator()(CSpan<S> in, MSpan<S> out) const {
    out[0] = in[0] - target.x;
    out[1] = in[1] - target.y;
    out[2] = in[2] - target.theta;
  }
};

// out = a - b, reading [a(3), b(3)].
struct MatchStates {
  template <class S>
  void operator()(CSpan<S> in, MSpan<S> out) const {
    out[0] = in[0] - in[3];
    out[1] = in[1] - in[4];
    out[2] = in[2] - in[5];
  }
};

struct EllipseBlock {
  scene::EllipseObstacle obs;

  template <class S>
  void operator()(CSpan<S> in, MSpan<S> out) const {
    const model::StateT<S> s{in[0], in[1], S(0.0)};
    out[0] = scene::ellipse_constraint(s, obs);
  }
};

// L1 epigraph pair: +-(s - target) <= e, reading [s(3), e(3)].
struct SlackPair {
  model::State target;

  template <class S>
  void operator()(CSpan<S> in, MSpan<S> out) const {
    const double t[3] = {target.x, target.y, target.theta};
    for (int c = 0; c < 3; ++c) {
      out[c] = in[c] - t[c] - in[3 + c];
      out[3 + c] = t[c] - in[c] - in[3 + c];
    }
  }
};

struct WeightedSlackSum {
  double weight;

  template <class S>
  S operator()(CSpan<S> in) const {
    return weight * (in[0] + in[1] + in[2]);
  }
};

std::vector<int> state_vars(int base0, int base1, int base2) {
  return {base0, base1, base2};
}

double planar_distance(const BoundarySpec& b) {
  return std::hypot(b.s_tf.x - b.s_t0.x, b.s_tf.y - b.s_t0.y);
}

double default_free_time(const BoundarySpec& b, const scene::ControlLimits& limits) {
  const double v = std::max(std::abs(limits.v_max), 1e-9);
  return std::max(0.1, 1.5 * planar_distance(b) / v);
}

model::State lerp_state(const model::State& a, const model::State& b, double t) {
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.theta + t * (b.theta - a.theta)};
}

void set_control_bounds(nlp::NlpProblem& p, int v_var, int omega_var,
                        const scene::ControlLimits& limits) {
  p.set_bounds(v_var, limits.v_min, limits.v_max);
  p.set_bounds(omega_var, limits.omega_min, limits.omega_max);
}

}  // namespace

void BoundarySpec::validate() const {
  if (!model::all_finite(s_t0) || !model::all_finite(s_tf)) {
    throw std::invalid_argument("boundary: states must be finite");
  }
}

void TimeScalingConfig::validate() const {
  if (N < 1) throw std::invalid_argument("time_scaling: N must be >= 1");
  if (t_min < 0.0) throw std::invalid_argument("time_scaling: t_min must be >= 0");
}

void ExpWeightConfig::validate() const {
  if (N < 1) throw std::invalid_argument("exp_weight: N must be >= 1");
  if (!(gamma > 1.0)) throw std::invalid_argument("exp_weight: gamma must exceed 1");
  if (!(t_s > 0.0)) throw std::invalid_argument("exp_weight: t_s must be positive");
}

void TwoStageConfig::validate() const {
  if (N1 < 1 || N2 < 1) throw std::invalid_argument("two_stage: N1, N2 must be >= 1");
  if (!(gamma > 1.0)) throw std::invalid_argument("two_stage: gamma must exceed 1");
  if (!(t_s > 0.0)) throw std::invalid_argument("two_stage: t_s must be positive");
  if (w1 < 0.0 || w2 < 0.0 || (w1 == 0.0 && w2 == 0.0)) {
    throw std::invalid_argument("two_stage: weights must be >= 0 and not both zero");
  }
}

nlp::NlpProblem build_time_scaling(const TimeScalingConfig& cfg, const BoundarySpec& b,
                                   const scene::Scene& scene) {
  cfg.validate();
  b.validate();
  scene.validate();
  const TimeScalingLayout lay(cfg.N);
  nlp::NlpProblem p(lay.num_vars());

  p.add_objective_term({lay.t_var()}, [](auto in) { return in[0]; });
  p.set_bounds(lay.t_var(), std::max(cfg.t_min, 0.0), kInf);

  p.add_eq_block(state_vars(lay.state_var(0, 0), lay.state_var(0, 1), lay.state_var(0, 2)),
                 3, PinState{b.s_t0});
  for (int n = 0; n < cfg.N; ++n) {
    p.add_eq_block({lay.t_var(), lay.state_var(n, 0), lay.state_var(n, 1),
                    lay.state_var(n, 2), lay.control_var(n, 0), lay.control_var(n, 1),
                    lay.state_var(n + 1, 0), lay.state_var(n + 1, 1),
                    lay.state_var(n + 1, 2)},
                   3, ScaledStepDefect{1.0 / cfg.N});
  }
  p.add_eq_block(
      state_vars(lay.state_var(cfg.N, 0), lay.state_var(cfg.N, 1), lay.state_var(cfg.N, 2)),
      3, PinState{b.s_tf});

  for (int n = 0; n < cfg.N; ++n) {
    for (const scene::EllipseObstacle& obs : scene.obstacles) {
      p.add_ineq_block({lay.state_var(n, 0), lay.state_var(n, 1)}, 1, EllipseBlock{obs});
    }
    set_control_bounds(p, lay.control_var(n, 0), lay.control_var(n, 1), scene.limits);
  }
  return p;
}

nlp::NlpProblem build_exp_weight(const ExpWeightConfig& cfg, const BoundarySpec& b,
                                 const scene::Scene& scene) {
  cfg.validate();
  b.validate();
  scene.validate();
  const ExpWeightLayout lay(cfg.N);
  nlp::NlpProblem p(lay.num_vars());

  double weight = 1.0;  // gamma^n
  for (int n = 0; n < cfg.N; ++n) {
    p.add_objective_term(
        state_vars(lay.slack_var(n, 0), lay.slack_var(n, 1), lay.slack_var(n, 2)),
        WeightedSlackSum{weight});
    weight *= cfg.gamma;
  }

  p.add_eq_block(state_vars(lay.state_var(0, 0), lay.state_var(0, 1), lay.state_var(0, 2)),
                 3, PinState{b.s_t0});
  for (int n = 0; n < cfg.N; ++n) {
    p.add_eq_block({lay.state_var(n, 0), lay.state_var(n, 1), lay.state_var(n, 2),
                    lay.control_var(n, 0), lay.control_var(n, 1),
                    lay.state_var(n + 1, 0), lay.state_var(n + 1, 1),
                    lay.state_var(n + 1, 2)},
                   3, FixedStepDefect{cfg.t_s});
  }
  p.add_eq_block(
      state_vars(lay.state_var(cfg.N, 0), lay.state_var(cfg.N, 1), lay.state_var(cfg.N, 2)),
      3, PinState{b.s_tf});

  for (int n = 0; n < cfg.N; ++n) {
    for (const scene::EllipseObstacle& obs : scene.obstacles) {
      p.add_ineq_block({lay.state_var(n, 0), lay.state_var(n, 1)}, 1, EllipseBlock{obs});
    }
    p.add_ineq_block({lay.state_var(n, 0), lay.state_var(n, 1), lay.state_var(n, 2),
                      lay.slack_var(n, 0), lay.slack_var(n, 1), lay.slack_var(n, 2)},
                     6, SlackPair{b.s_tf});
    set_control_bounds(p, lay.control_var(n, 0), lay.control_var(n, 1), scene.limits);
    for (int c = 0; c < 3; ++c) p.set_bounds(lay.slack_var(n, c), 0.0, kInf);
  }
  return p;
}

nlp::NlpProblem build_two_stage(const TwoStageConfig& cfg, const BoundarySpec& b,
                                const scene::Scene& scene) {
  cfg.validate();
  b.validate();
  scene.validate();
  const TwoStageLayout lay(cfg.N1, cfg.N2);
  const int num_obs = static_cast<int>(scene.obstacles.size());
  nlp::NlpProblem p(lay.num_vars());

  if (cfg.w1 > 0.0) {
    double weight = cfg.w1;  // w1 * gamma^n
    for (int n = 0; n < cfg.N1; ++n) {
      p.add_objective_term(
          state_vars(lay.slack_var(n, 0), lay.slack_var(n, 1), lay.slack_var(n, 2)),
          WeightedSlackSum{weight});
      weight *= cfg.gamma;
    }
  }
  if (cfg.w2 > 0.0) {
    p.add_objective_term({lay.t2_var()},
                         [w = cfg.w2](auto in) { return w * in[0]; });
  }

  // Equality blocks in the layout's documented order.
  p.add_eq_block(state_vars(lay.s1_var(0, 0), lay.s1_var(0, 1), lay.s1_var(0, 2)), 3,
                 PinState{b.s_t0});
  for (int n = 0; n < cfg.N1; ++n) {
    p.add_eq_block({lay.s1_var(n, 0), lay.s1_var(n, 1), lay.s1_var(n, 2),
                    lay.u1_var(n, 0), lay.u1_var(n, 1), lay.s1_var(n + 1, 0),
                    lay.s1_var(n + 1, 1), lay.s1_var(n + 1, 2)},
                   3, FixedStepDefect{cfg.t_s});
  }
  p.add_eq_block({lay.s1_var(cfg.N1, 0), lay.s1_var(cfg.N1, 1), lay.s1_var(cfg.N1, 2),
                  lay.s2_var(0, 0), lay.s2_var(0, 1), lay.s2_var(0, 2)},
                 3, MatchStates{});
  for (int n = 0; n < cfg.N2; ++n) {
    p.add_eq_block({lay.t2_var(), lay.s2_var(n, 0), lay.s2_var(n, 1), lay.s2_var(n, 2),
                    lay.u2_var(n, 0), lay.u2_var(n, 1), lay.s2_var(n + 1, 0),
                    lay.s2_var(n + 1, 1), lay.s2_var(n + 1, 2)},
                   3, ScaledStepDefect{1.0 / cfg.N2});
  }
  p.add_eq_block(
      state_vars(lay.s2_var(cfg.N2, 0), lay.s2_var(cfg.N2, 1), lay.s2_var(cfg.N2, 2)), 3,
      PinState{b.s_tf});

  // Inequalities: stage-1 ellipses, stage-1 slack pairs, stage-2 ellipses.
  for (int n = 0; n < cfg.N1; ++n) {
    for (const scene::EllipseObstacle& obs : scene.obstacles) {
      p.add_ineq_block({lay.s1_var(n, 0), lay.s1_var(n, 1)}, 1, EllipseBlock{obs});
    }
  }
  for (int n = 0; n < cfg.N1; ++n) {
    p.add_ineq_block({lay.s1_var(n, 0), lay.s1_var(n, 1), lay.s1_var(n, 2),
                      lay.slack_var(n, 0), lay.slack_var(n, 1), lay.slack_var(n, 2)},
                     6, SlackPair{b.s_tf});
  }
  for (int n = 0; n < cfg.N2; ++n) {
    for (const scene::EllipseObstacle& obs : scene.obstacles) {
      p.add_ineq_block({lay.s2_var(n, 0), lay.s2_var(n, 1)}, 1, EllipseBlock{obs});
    }
  }

  for (int n = 0; n < cfg.N1; ++n) {
    set_control_bounds(p, lay.u1_var(n, 0), lay.u1_var(n, 1), scene.limits);
    for (int c = 0; c < 3; ++c) p.set_bounds(lay.slack_var(n, c), 0.0, kInf);
  }
  for (int n = 0; n < cfg.N2; ++n) {
    set_control_bounds(p, lay.u2_var(n, 0), lay.u2_var(n, 1), scene.limits);
  }
  p.set_bounds(lay.t2_var(), 0.0, kInf);

  if (p.num_eq() != lay.num_eq() || p.num_ineq() != lay.num_ineq(num_obs)) {
    throw std::logic_error("two_stage: layout row count mismatch");
  }
  return p;
}

nlp::NlpProblem build_fixed_horizon_feasibility(int N, double t_s, const BoundarySpec& b,
                                                const scene::Scene& scene) {
  if (N < 1) throw std::invalid_argument("fixed_horizon: N must be >= 1");
  if (!(t_s > 0.0)) throw std::invalid_argument("fixed_horizon: t_s must be positive");
  b.validate();
  scene.validate();
  const FixedHorizonLayout lay(N);
  nlp::NlpProblem p(lay.num_vars());

  p.add_eq_block(state_vars(lay.state_var(0, 0), lay.state_var(0, 1), lay.state_var(0, 2)),
                 3, PinState{b.s_t0});
  for (int n = 0; n < N; ++n) {
    p.add_eq_block({lay.state_var(n, 0), lay.state_var(n, 1), lay.state_var(n, 2),
                    lay.control_var(n, 0), lay.control_var(n, 1),
                    lay.state_var(n + 1, 0), lay.state_var(n + 1, 1),
                    lay.state_var(n + 1, 2)},
                   3, FixedStepDefect{t_s});
  }
  p.add_eq_block(
      state_vars(lay.state_var(N, 0), lay.state_var(N, 1), lay.state_var(N, 2)), 3,
      PinState{b.s_tf});

  for (int n = 0; n < N; ++n) {
    for (const scene::EllipseObstacle& obs : scene.obstacles) {
      p.add_ineq_block({lay.state_var(n, 0), lay.state_var(n, 1)}, 1, EllipseBlock{obs});
    }
    set_control_bounds(p, lay.control_var(n, 0), lay.control_var(n, 1), scene.limits);
  }
  return p;
}

VectorXd initial_guess(const TimeScalingConfig& cfg, const BoundarySpec& b,
                       const scene::ControlLimits& limits) {
  cfg.validate();
  b.validate();
  const TimeScalingLayout lay(cfg.N);
  VectorXd x = VectorXd::Zero(lay.num_vars());
  x[lay.t_var()] = cfg.t_init > 0.0 ? cfg.t_init : default_free_time(b, limits);
  for (int n = 0; n <= cfg.N; ++n) {
    const model::State s = lerp_state(b.s_t0, b.s_tf, static_cast<double>(n) / cfg.N);
    x[lay.state_var(n, 0)] = s.x;
    x[lay.state_var(n, 1)] = s.y;
    x[lay.state_var(n, 2)] = s.theta;
  }
  for (int n = 0; n < cfg.N; ++n) {
    x[lay.control_var(n, 0)] = 0.5 * limits.v_max;
    x[lay.control_var(n, 1)] = 0.0;
  }
  return x;
}

VectorXd initial_guess(const ExpWeightConfig& cfg, const BoundarySpec& b,
                       const scene::ControlLimits& limits) {
  cfg.validate();
  b.validate();
  const ExpWeightLayout lay(cfg.N);
  VectorXd x = VectorXd::Zero(lay.num_vars());
  for (int n = 0; n <= cfg.N; ++n) {
    const model::State s = lerp_state(b.s_t0, b.s_tf, static_cast<double>(n) / cfg.N);
    x[lay.state_var(n, 0)] = s.x;
    x[lay.state_var(n, 1)] = s.y;
    x[lay.state_var(n, 2)] = s.theta;
    if (n < cfg.N) {
      x[lay.slack_var(n, 0)] = std::abs(s.x - b.s_tf.x);
      x[lay.slack_var(n, 1)] = std::abs(s.y - b.s_tf.y);
      x[lay.slack_var(n, 2)] = std::abs(s.theta - b.s_tf.theta);
      x[lay.control_var(n, 0)] = 0.5 * limits.v_max;
      x[lay.control_var(n, 1)] = 0.0;
    }
  }
  return x;
}

VectorXd initial_guess(const TwoStageConfig& cfg, const BoundarySpec& b,
                       const scene::ControlLimits& limits) {
  cfg.validate();
  b.validate();
  const TwoStageLayout lay(cfg.N1, cfg.N2);
  VectorXd x = VectorXd::Zero(lay.num_vars());
  const int total = cfg.N1 + cfg.N2;
  for (int n = 0; n <= cfg.N1; ++n) {
    const model::State s = lerp_state(b.s_t0, b.s_tf, static_cast<double>(n) / total);
    x[lay.s1_var(n, 0)] = s.x;
    x[lay.s1_var(n, 1)] = s.y;
    x[lay.s1_var(n, 2)] = s.theta;
    if (n < cfg.N1) {
      x[lay.slack_var(n, 0)] = std::abs(s.x - b.s_tf.x);
      x[lay.slack_var(n, 1)] = std::abs(s.y - b.s_tf.y);
      x[lay.slack_var(n, 2)] = std::abs(s.theta - b.s_tf.theta);
      x[lay.u1_var(n, 0)] = 0.5 * limits.v_max;
      x[lay.u1_var(n, 1)] = 0.0;
    }
  }
  for (int n = 0; n <= cfg.N2; ++n) {
    const model::State s =
        lerp_state(b.s_t0, b.s_tf, static_cast<double>(cfg.N1 + n) / total);
    x[lay.s2_var(n, 0)] = s.x;
    x[lay.s2_var(n, 1)] = s.y;
    x[lay.s2_var(n, 2)] = s.theta;
    if (n < cfg.N2) {
      x[lay.u2_var(n, 0)] = 0.5 * limits.v_max;
      x[lay.u2_var(n, 1)] = 0.0;
    }
  }
  x[lay.t2_var()] = cfg.t2_init > 0.0 ? cfg.t2_init : default_free_time(b, limits);
  return x;
}

VectorXd initial_guess_fixed_horizon(int N, const BoundarySpec& b,
                                     const scene::ControlLimits& limits) {
  b.validate();
  const FixedHorizonLayout lay(N);
  VectorXd x = VectorXd::Zero(lay.num_vars());
  for (int n = 0; n <= N; ++n) {
    const model::State s = lerp_state(b.s_t0, b.s_tf, static_cast<double>(n) / N);
    x[lay.state_var(n, 0)] = s.x;
    x[lay.state_var(n, 1)] = s.y;
    x[lay.state_var(n, 2)] = s.theta;
    if (n < N) {
      x[lay.control_var(n, 0)] = 0.5 * limits.v_max;
      x[lay.control_var(n, 1)] = 0.0;
    }
  }
  return x;
}

std::optional<int> stabilization_index(const model::Trajectory& traj,
                                       const model::State& target, double tol) {
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    if (model::max_component_distance(traj.states[n], target) < tol) {
      return static_cast<int>(n);
    }
  }
  return std::nullopt;
}

OcpSolution extract_solution(const TimeScalingConfig& cfg, const VectorXd& x,
                             nlp::SolverReport report) {
  cfg.validate();
  const TimeScalingLayout lay(cfg.N);
  if (x.size() != lay.num_vars()) {
    throw std::invalid_argument("extract: time-scaling layout mismatch");
  }
  OcpSolution sol;
  const double total = x[lay.t_var()];
  const double dt = total / cfg.N;
  for (int n = 0; n <= cfg.N; ++n) {
    sol.trajectory.times.push_back(n * dt);
    sol.trajectory.states.push_back(
        {x[lay.state_var(n, 0)], x[lay.state_var(n, 1)], x[lay.state_var(n, 2)]});
    if (n < cfg.N) {
      sol.trajectory.controls.push_back(
          {x[lay.control_var(n, 0)], x[lay.control_var(n, 1)]});
    }
  }
  sol.total_time = total;
  sol.objective = report.objective;
  sol.report = report;
  return sol;
}

OcpSolution extract_solution(const ExpWeightConfig& cfg, const VectorXd& x,
                             nlp::SolverReport report, const model::State& s_tf) {
  cfg.validate();
  const ExpWeightLayout lay(cfg.N);
  if (x.size() != lay.num_vars()) {
    throw std::invalid_argument("extract: exp-weight layout mismatch");
  }
  OcpSolution sol;
  for (int n = 0; n <= cfg.N; ++n) {
    sol.trajectory.times.push_back(n * cfg.t_s);
    sol.trajectory.states.push_back(
        {x[lay.state_var(n, 0)], x[lay.state_var(n, 1)], x[lay.state_var(n, 2)]});
    if (n < cfg.N) {
      sol.trajectory.controls.push_back(
          {x[lay.control_var(n, 0)], x[lay.control_var(n, 1)]});
    }
  }
  const int n_star = stabilization_index(sol.trajectory, s_tf).value_or(cfg.N);
  sol.total_time = n_star * cfg.t_s;
  sol.objective = report.objective;
  sol.report = report;
  return sol;
}

OcpSolution extract_solution(const TwoStageConfig& cfg, const VectorXd& x,
                             nlp::SolverReport report, const model::State& s_tf) {
  cfg.validate();
  const TwoStageLayout lay(cfg.N1, cfg.N2);
  if (x.size() != lay.num_vars()) {
    throw std::invalid_argument("extract: two-stage layout mismatch");
  }
  OcpSolution sol;
  const double t2 = x[lay.t2_var()];
  for (int n = 0; n <= cfg.N1; ++n) {
    sol.trajectory.times.push_back(n * cfg.t_s);
    sol.trajectory.states.push_back(
        {x[lay.s1_var(n, 0)], x[lay.s1_var(n, 1)], x[lay.s1_var(n, 2)]});
    if (n < cfg.N1) {
      sol.trajectory.controls.push_back({x[lay.u1_var(n, 0)], x[lay.u1_var(n, 1)]});
    }
  }
  // Stage 2 continues from the stitch point; its first state duplicates the
  // stage-1 end and is dropped.
  const double stage1_end = cfg.N1 * cfg.t_s;
  for (int n = 1; n <= cfg.N2; ++n) {
    sol.trajectory.times.push_back(stage1_end + n * (t2 / cfg.N2));
    sol.trajectory.states.push_back(
        {x[lay.s2_var(n, 0)], x[lay.s2_var(n, 1)], x[lay.s2_var(n, 2)]});
  }
  for (int n = 0; n < cfg.N2; ++n) {
    sol.trajectory.controls.push_back({x[lay.u2_var(n, 0)], x[lay.u2_var(n, 1)]});
  }
  sol.stage2_time = t2;
  sol.stage2_degenerate = t2 <= kDegenerateStageTime;
  if (sol.stage2_degenerate) {
    const auto arrival = stabilization_index(sol.trajectory, s_tf);
    sol.total_time = arrival.value_or(cfg.N1) * cfg.t_s;
  } else {
    sol.total_time = stage1_end + t2;
  }
  sol.objective = report.objective;
  sol.report = report;
  return sol;
}

VectorXd encode_time_scaling(const TimeScalingConfig& cfg, double total_time,
                             std::span<const model::State> states,
                             std::span<const model::Control> controls) {
  cfg.validate();
  const TimeScalingLayout lay(cfg.N);
  if (states.size() != static_cast<std::size_t>(cfg.N + 1) ||
      controls.size() != static_cast<std::size_t>(cfg.N)) {
    throw std::invalid_argument("encode: time-scaling sequence length mismatch");
  }
  VectorXd x = VectorXd::Zero(lay.num_vars());
  x[lay.t_var()] = total_time;
  for (int n = 0; n <= cfg.N; ++n) {
    x[lay.state_var(n, 0)] = states[n].x;
    x[lay.state_var(n, 1)] = states[n].y;
    x[lay.state_var(n, 2)] = states[n].theta;
  }
  for (int n = 0; n < cfg.N; ++n) {
    x[lay.control_var(n, 0)] = controls[n].v;
    x[lay.control_var(n, 1)] = controls[n].omega;
  }
  return x;
}

VectorXd encode_exp_weight(const ExpWeightConfig& cfg,
                           std::span<const model::State> states,
                           std::span<const model::Control> controls,
                           const model::State& s_tf) {
  cfg.validate();
  const ExpWeightLayout lay(cfg.N);
  if (states.size() != static_cast<std::size_t>(cfg.N + 1) ||
      controls.size() != static_cast<std::size_t>(cfg.N)) {
    throw std::invalid_argument("encode: exp-weight sequence length mismatch");
  }
  VectorXd x = VectorXd::Zero(lay.num_vars());
  for (int n = 0; n <= cfg.N; ++n) {
    x[lay.state_var(n, 0)] = states[n].x;
    x[lay.state_var(n, 1)] = states[n].y;
    x[lay.state_var(n, 2)] = states[n].theta;
    if (n < cfg.N) {
      x[lay.slack_var(n, 0)] = std::abs(states[n].x - s_tf.x);
      x[lay.slack_var(n, 1)] = std::abs(states[n].y - s_tf.y);
      x[lay.slack_var(n, 2)] = std::abs(states[n].theta - s_tf.theta);
      x[lay.control_var(n, 0)] = controls[n].v;
      x[lay.control_var(n, 1)] = controls[n].omega;
    }
  }
  return x;
}

VectorXd encode_two_stage(const TwoStageConfig& cfg,
                          std::span<const model::State> stage1_states,
                          std::span<const model::Control> stage1_controls,
                          double stage2_time,
                          std::span<const model::State> stage2_states,
                          std::span<const model::Control> stage2_controls,
                          const model::State& s_tf) {
  cfg.validate();
  const TwoStageLayout lay(cfg.N1, cfg.N2);
  if (stage1_states.size() != static_cast<std::size_t>(cfg.N1 + 1) ||
      stage1_controls.size() != static_cast<std::size_t>(cfg.N1) ||
      stage2_states.size() != static_cast<std::size_t>(cfg.N2 + 1) ||
      stage2_controls.size() != static_cast<std::size_t>(cfg.N2)) {
    throw std::invalid_argument("encode: two-stage sequence length mismatch");
  }
  VectorXd x = VectorXd::Zero(lay.num_vars());
  for (int n = 0; n <= cfg.N1; ++n) {
    x[lay.s1_var(n, 0)] = stage1_states[n].x;
    x[lay.s1_var(n, 1)] = stage1_states[n].y;
    x[lay.s1_var(n, 2)] = stage1_states[n].theta;
    if (n < cfg.N1) {
      x[lay.slack_var(n, 0)] = std::abs(stage1_states[n].x - s_tf.x);
      x[lay.slack_var(n, 1)] = std::abs(stage1_states[n].y - s_tf.y);
      x[lay.slack_var(n, 2)] = std::abs(stage1_states[n].theta - s_tf.theta);
      x[lay.u1_var(n, 0)] = stage1_controls[n].v;
      x[lay.u1_var(n, 1)] = stage1_controls[n].omega;
    }
  }
  x[lay.t2_var()] = stage2_time;
  for (int n = 0; n <= cfg.N2; ++n) {
    x[lay.s2_var(n, 0)] = stage2_states[n].x;
    x[lay.s2_var(n, 1)] = stage2_states[n].y;
    x[lay.s2_var(n, 2)] = stage2_states[n].theta;
    if (n < cfg.N2) {
      x[lay.u2_var(n, 0)] = stage2_controls[n].v;
      x[lay.u2_var(n, 1)] = stage2_controls[n].omega;
    }
  }
  return x;
}

namespace {

bool probe_feasible(int N, double t_s, const BoundarySpec& b, const scene::Scene& scene,
                    const nlp::SolverSettings& settings) {
  const nlp::NlpProblem p = build_fixed_horizon_feasibility(N, t_s, b, scene);
  const VectorXd x0 = initial_guess_fixed_horizon(N, b, scene.limits);
  const nlp::SolveResult r = nlp::solve(p, x0, settings);
  return r.report.status == nlp::SolveStatus::converged &&
         std::max(r.report.max_eq_violation, r.report.max_ineq_violation) <=
             settings.constraint_tolerance;
}

}  // namespace

MinHorizonResult min_horizon_search(const BoundarySpec& b, const scene::Scene& scene,
                                    double t_s, int n_hi,
                                    const nlp::SolverSettings& settings) {
  if (n_hi < 1) throw std::invalid_argument("min_horizon_search: n_hi must be >= 1");
  nlp::SolverSettings probe = settings;
  probe.max_outer_iterations = std::min(probe.max_outer_iterations, 40);

  MinHorizonResult result;
  result.probes = 1;
  if (!probe_feasible(n_hi, t_s, b, scene, probe)) {
    result.status = MinHorizonStatus::infeasible_at_upper_bound;
    result.n_star = n_hi;
    return result;
  }
  int lo = 1;
  int hi = n_hi;
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    ++result.probes;
    if (probe_feasible(mid, t_s, b, scene, probe)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  result.n_star = lo;
  return result;
}

}  // namespace topt::ocp
