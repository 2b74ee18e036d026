#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "topt/model.hpp"
#include "topt/nlp.hpp"
#include "topt/scene.hpp"

namespace topt::ocp {

using nlp::VectorXd;

struct BoundarySpec {
  model::State s_t0;
  model::State s_tf;

  void validate() const;
};

// Free-total-time transcription: N shooting intervals of length T/N, total
// time T is a decision variable bounded below by t_min.
struct TimeScalingConfig {
  int N = 50;
  double t_min = 0.0;
  // Initial guess for T; non-positive means "derive from the boundary pair".
  double t_init = 0.0;

  void validate() const;
};

// Fixed grid of N steps at sampling time t_s; stage deviations from the goal
// are charged gamma^n per step, driving the arrival as early as possible.
struct ExpWeightConfig {
  int N = 400;
  double gamma = 1.025;
  double t_s = 0.02;

  void validate() const;
};

// Fixed-grid stage 1 (N1 steps at t_s) stitched to a free-duration stage 2
// (N2 steps of T2/N2). Objective: w1 * stage-1 weighted deviations + w2 * T2.
struct TwoStageConfig {
  int N1 = 25;
  int N2 = 25;
  double gamma = 1.025;
  double t_s = 0.02;
  double w1 = 0.0;
  double w2 = 1.0;
  double t2_init = 0.0;  // non-positive: derive from the boundary pair

  void validate() const;
};

using FormulationConfig = std::variant<TimeScalingConfig, ExpWeightConfig, TwoStageConfig>;

// Decision-vector and constraint-row layouts. Builders add variables and
// constraint blocks in exactly this order; decoding, warm-start shifting and
// the tests rely on it.
struct TimeScalingLayout {
  int N;

  explicit TimeScalingLayout(int n) : N(n) {}
  int num_vars() const { return 1 + 3 * (N + 1) + 2 * N; }
  int t_var() const { return 0; }
  int state_var(int n, int c) const { return 1 + 3 * n + c; }
  int control_var(int n, int c) const { return 1 + 3 * (N + 1) + 2 * n + c; }
};

struct ExpWeightLayout {
  int N;

  explicit ExpWeightLayout(int n) : N(n) {}
  int num_vars() const { return 3 * (N + 1) + 2 * N + 3 * N; }
  int state_var(int n, int c) const { return 3 * n + c; }
  int control_var(int n, int c) const { return 3 * (N + 1) + 2 * n + c; }
  int slack_var(int n, int c) const { return 3 * (N + 1) + 2 * N + 3 * n + c; }
};

// States and controls only; used by the fixed-horizon feasibility probes.
struct FixedHorizonLayout {
  int N;

  explicit FixedHorizonLayout(int n) : N(n) {}
  int num_vars() const { return 3 * (N + 1) + 2 * N; }
  int state_var(int n, int c) const { return 3 * n + c; }
  int control_var(int n, int c) const { return 3 * (N + 1) + 2 * n + c; }
};

struct TwoStageLayout {
  int N1;
  int N2;

  TwoStageLayout(int n1, int n2) : N1(n1), N2(n2) {}
  int s1_var(int n, int c) const { return 3 * n + c; }
  int u1_var(int n, int c) const { return 3 * (N1 + 1) + 2 * n + c; }
  int slack_var(int n, int c) const { return 3 * (N1 + 1) + 2 * N1 + 3 * n + c; }
  int t2_var() const { return 3 * (N1 + 1) + 2 * N1 + 3 * N1; }
  int s2_var(int n, int c) const { return t2_var() + 1 + 3 * n + c; }
  int u2_var(int n, int c) const { return t2_var() + 1 + 3 * (N2 + 1) + 2 * n + c; }
  int num_vars() const { return t2_var() + 1 + 3 * (N2 + 1) + 2 * N2; }

  // Equality rows: [init | stage-1 defects | stitch | stage-2 defects | terminal].
  int eq_init_row() const { return 0; }
  int eq_defect1_row(int n) const { return 3 + 3 * n; }
  int eq_stitch_row() const { return 3 + 3 * N1; }
  int eq_defect2_row(int n) const { return eq_stitch_row() + 3 + 3 * n; }
  int eq_terminal_row() const { return eq_stitch_row() + 3 + 3 * N2; }
  int num_eq() const { return eq_terminal_row() + 3; }

  // Inequality rows: [stage-1 ellipses | stage-1 slack pairs | stage-2 ellipses].
  int ineq_ellipse1_row(int n, int num_obstacles) const { return n * num_obstacles; }
  int ineq_slack_row(int n, int num_obstacles) const {
    return N1 * num_obstacles + 6 * n;
  }
  int ineq_ellipse2_row(int n, int num_obstacles) const {
    return N1 * num_obstacles + 6 * N1 + n * num_obstacles;
  }
  int num_ineq(int num_obstacles) const {
    return (N1 + N2) * num_obstacles + 6 * N1;
  }
};

nlp::NlpProblem build_time_scaling(const TimeScalingConfig& cfg, const BoundarySpec& b,
                                   const scene::Scene& scene);
nlp::NlpProblem build_exp_weight(const ExpWeightConfig& cfg, const BoundarySpec& b,
                                 const scene::Scene& scene);
nlp::NlpProblem build_two_stage(const TwoStageConfig& cfg, const BoundarySpec& b,
                                const scene::Scene& scene);
// Zero objective, fixed horizon N at step t_s; feasible iff the goal is
// reachable in N steps.
nlp::NlpProblem build_fixed_horizon_feasibility(int N, double t_s, const BoundarySpec& b,
                                                const scene::Scene& scene);

// Straight-line state interpolation, cruise-speed controls, slacks at the
// interpolated deviation, free times at 1.5 x planar distance / v_max
// (floored at 0.1 s) unless the config overrides them.
VectorXd initial_guess(const TimeScalingConfig& cfg, const BoundarySpec& b,
                       const scene::ControlLimits& limits);
VectorXd initial_guess(const ExpWeightConfig& cfg, const BoundarySpec& b,
                       const scene::ControlLimits& limits);
VectorXd initial_guess(const TwoStageConfig& cfg, const BoundarySpec& b,
                       const scene::ControlLimits& limits);
VectorXd initial_guess_fixed_horizon(int N, const BoundarySpec& b,
                                     const scene::ControlLimits& limits);

struct OcpSolution {
  model::Trajectory trajectory;
  double total_time = 0.0;
  std::optional<double> stage2_time;
  bool stage2_degenerate = false;
  double objective = 0.0;
  nlp::SolverReport report;
};

// Stage-2 durations at or below this are treated as a collapsed stage.
inline constexpr double kDegenerateStageTime = 1e-6;
// Goal-proximity threshold used when reading an arrival index off a
// fixed-grid trajectory.
inline constexpr double kStabilizationTol = 1e-4;

// First index n with max|s_n - target| < tol; nullopt when never reached.
std::optional<int> stabilization_index(const model::Trajectory& traj,
                                       const model::State& target,
                                       double tol = kStabilizationTol);

OcpSolution extract_solution(const TimeScalingConfig& cfg, const VectorXd& x,
                             nlp::SolverReport report);
OcpSolution extract_solution(const ExpWeightConfig& cfg, const VectorXd& x,
                             nlp::SolverReport report, const model::State& s_tf);
OcpSolution extract_solution(const TwoStageConfig& cfg, const VectorXd& x,
                             nlp::SolverReport report, const model::State& s_tf);

// Inverse of extract_solution for round trips and warm starts.
VectorXd encode_time_scaling(const TimeScalingConfig& cfg, double total_time,
                             std::span<const model::State> states,
                             std::span<const model::Control> controls);
VectorXd encode_exp_weight(const ExpWeightConfig& cfg,
                           std::span<const model::State> states,
                           std::span<const model::Control> controls,
                           const model::State& s_tf);
VectorXd encode_two_stage(const TwoStageConfig& cfg,
                          std::span<const model::State> stage1_states,
                          std::span<const model::Control> stage1_controls,
                          double stage2_time,
                          std::span<const model::State> stage2_states,
                          std::span<const model::Control> stage2_controls,
                          const model::State& s_tf);

enum class MinHorizonStatus { found, infeasible_at_upper_bound };

struct MinHorizonResult {
  MinHorizonStatus status = MinHorizonStatus::found;
  int n_star = 0;
  int probes = 0;
};

// Bisection over N in [1, n_hi] on fixed-horizon feasibility probes; valid
// because a plan that reaches the goal in N steps extends to N+1 by holding
// position with zero input. The upper bound is verified first.
MinHorizonResult min_horizon_search(const BoundarySpec& b, const scene::Scene& scene,
                                    double t_s, int n_hi,
                                    const nlp::SolverSettings& settings = {});

}  // namespace topt::ocp
