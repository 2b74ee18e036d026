#include "topt/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace topt::mpc {

using model::Control;
using model::State;
using model::Trajectory;
using nlp::VectorXd;

void MpcConfig::validate() const {
  two_stage.validate();
  solver.validate();
  if (!(convergence_tol > 0.0)) {
    throw std::invalid_argument("mpc: convergence_tol must be positive");
  }
  if (max_replannings < 1) {
    throw std::invalid_argument("mpc: max_replannings must be >= 1");
  }
  if (w1_initial < 0 || w2_initial < 0 || w1_end_phase < 0 || w2_end_phase < 0) {
    throw std::invalid_argument("mpc: weights must be non-negative");
  }
}

ComputationTimeSource ComputationTimeSource::from_durations(std::vector<double> durations) {
  ComputationTimeSource ct;
  ct.mode = Mode::injected;
  ct.injected = std::move(durations);
  ct.validate();
  return ct;
}

void ComputationTimeSource::validate() const {
  if (mode == Mode::injected) {
    if (injected.empty()) {
      throw std::invalid_argument("computation times: injected list is empty");
    }
    for (double d : injected) {
      if (!(d > 0.0) || !std::isfinite(d)) {
        throw std::invalid_argument("computation times: durations must be positive");
      }
    }
  }
}

int compute_update_index(double t_comp, double t_s, int n1) {
  if (!(t_comp > 0.0)) {
    throw std::invalid_argument("compute_update_index: t_comp must be positive");
  }
  const int n = std::max(1, static_cast<int>(std::ceil(t_comp / t_s)));
  if (n > n1) {
    throw BudgetOverrunError("solve took " + std::to_string(n) +
                             " sampling periods, exceeding the stage-1 horizon " +
                             std::to_string(n1));
  }
  return n;
}

bool should_switch_phase(double t2, int n_update, double t_s) {
  return t2 - n_update * t_s <= 0.0;
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed:
      return "completed";
    case RunStatus::budget_overrun:
      return "budget_overrun";
    case RunStatus::solver_failure:
      return "solver_failure";
    case RunStatus::replanning_limit:
      return "replanning_limit";
  }
  return "unknown";
}

double MpcLog::max_stitch_discontinuity() const {
  double worst = 0.0;
  for (const Replanning& r : replannings) {
    // Locate the executed sample at the stitch instant; the plan must
    // continue exactly from it.
    const auto it = std::lower_bound(executed.times.begin(), executed.times.end(),
                                     r.stitch_time - 0.25 * t_s);
    if (it == executed.times.end()) {
      return std::numeric_limits<double>::infinity();
    }
    const std::size_t i = static_cast<std::size_t>(it - executed.times.begin());
    worst = std::max(worst, std::abs(executed.times[i] - r.stitch_time));
    worst = std::max(worst,
                     model::max_component_distance(executed.states[i], r.handoff_state));
  }
  return worst;
}

void MpcLog::check_consistency(double tol) const {
  executed.validate(/*allow_equal_times=*/true);
  if (max_stitch_discontinuity() > tol) {
    throw std::logic_error("mpc log: executed trajectory breaks at a stitch point");
  }
}

namespace {

struct PlanData {
  VectorXd x;
  ocp::OcpSolution solution;
};

// Warm start for the next replanning: the previous plan advanced by the
// executed span. Fixed-grid nodes that survive the shift are copied
// verbatim; the remainder takes the previous plan's controls (zero-order
// hold in time) and integrates the dynamics forward, so the guess carries no
// interpolation defects and the leftover mismatch concentrates in the
// boundary rows. The stage-2 duration shrinks by the executed span and
// slacks are rebuilt from the states.
VectorXd shift_warm_start(const ocp::TwoStageConfig& cfg, const ocp::OcpSolution& prev,
                          int shift, const State& s_tf) {
  const ocp::TwoStageLayout lay(cfg.N1, cfg.N2);
  const Trajectory& plan = prev.trajectory;
  const auto sample_control = [&plan](double t) -> Control {
    if (plan.controls.empty()) return {0.0, 0.0};
    if (t <= plan.times.front()) return plan.controls.front();
    if (t >= plan.times.back()) return plan.controls.back();
    const auto it = std::upper_bound(plan.times.begin(), plan.times.end(), t);
    const std::size_t j = (it - plan.times.begin()) - 1;
    return plan.controls[std::min(j, plan.controls.size() - 1)];
  };

  VectorXd x(lay.num_vars());
  const double origin = shift * cfg.t_s;
  State s = plan.states[std::min<std::size_t>(shift, plan.states.size() - 1)];
  for (int n = 0; n <= cfg.N1; ++n) {
    if (n + shift <= cfg.N1) s = plan.states[n + shift];  // surviving node
    x[lay.s1_var(n, 0)] = s.x;
    x[lay.s1_var(n, 1)] = s.y;
    x[lay.s1_var(n, 2)] = s.theta;
    if (n < cfg.N1) {
      const Control u = n + shift < cfg.N1 ? plan.controls[n + shift]
                                           : sample_control(origin + n * cfg.t_s);
      x[lay.u1_var(n, 0)] = u.v;
      x[lay.u1_var(n, 1)] = u.omega;
      x[lay.slack_var(n, 0)] = std::abs(s.x - s_tf.x);
      x[lay.slack_var(n, 1)] = std::abs(s.y - s_tf.y);
      x[lay.slack_var(n, 2)] = std::abs(s.theta - s_tf.theta);
      if (n + shift >= cfg.N1) s = model::rk4_step(s, u, cfg.t_s);
    }
  }
  const double prev_t2 = prev.stage2_time.value_or(0.0);
  const double t2 = std::max(0.0, prev_t2 - shift * cfg.t_s);
  x[lay.t2_var()] = t2;
  const double stage2_origin = origin + cfg.N1 * cfg.t_s;
  const double dt2 = t2 / cfg.N2;
  for (int n = 0; n <= cfg.N2; ++n) {
    x[lay.s2_var(n, 0)] = s.x;
    x[lay.s2_var(n, 1)] = s.y;
    x[lay.s2_var(n, 2)] = s.theta;
    if (n < cfg.N2) {
      const Control u = sample_control(stage2_origin + n * dt2);
      x[lay.u2_var(n, 0)] = u.v;
      x[lay.u2_var(n, 1)] = u.omega;
      s = model::rk4_step(s, u, dt2);
    }
  }
  return x;
}

// Multipliers follow the time shift so the warm solve starts near its KKT
// point. Defect multipliers are costate samples in state units and
// interpolate across both grids; pointwise-constraint multipliers carry a
// density proportional to the local grid step and are rescaled when a row
// lands on a different step size; the L1 rows rescale by the weight ratio of
// their new position.
class MultiplierResampler {
 public:
  MultiplierResampler(const ocp::TwoStageConfig& cfg, int num_obstacles,
                      double prev_stage2_time, const nlp::WarmStart& prev)
      : cfg_(cfg), lay_(cfg.N1, cfg.N2), num_obs_(num_obstacles), prev_(prev) {
    const double dt2 = prev_stage2_time / cfg.N2;
    for (int n = 0; n < cfg.N1; ++n) {
      times_.push_back(n * cfg.t_s);
      rows_.push_back(lay_.eq_defect1_row(n));
      steps_.push_back(cfg.t_s);
      ellipse_rows_.push_back(lay_.ineq_ellipse1_row(n, num_obs_));
    }
    for (int n = 0; n < cfg.N2; ++n) {
      times_.push_back(cfg.N1 * cfg.t_s + n * dt2);
      rows_.push_back(lay_.eq_defect2_row(n));
      steps_.push_back(dt2);
      ellipse_rows_.push_back(lay_.ineq_ellipse2_row(n, num_obs_));
    }
  }

  // Piecewise-linear costate sample, one defect component.
  double lambda_at(double t, int c) const {
    const std::size_t j = locate(t);
    const double span = j + 1 < times_.size() ? times_[j + 1] - times_[j] : 0.0;
    const double a =
        span > 0.0 ? std::clamp((t - times_[j]) / span, 0.0, 1.0) : 0.0;
    const double v0 = prev_.eq_multipliers[rows_[j] + c];
    const double v1 = prev_.eq_multipliers[rows_[std::min(j + 1, rows_.size() - 1)] + c];
    return v0 + a * (v1 - v0);
  }

  // Obstacle-row multiplier density at t, converted to a new step size.
  double ellipse_at(double t, int obstacle, double new_step) const {
    const std::size_t j = locate(t);
    const double old_step = steps_[j];
    const double mu = prev_.ineq_multipliers[ellipse_rows_[j] + obstacle];
    if (old_step <= 1e-9) return mu;
    return mu * (new_step / old_step);
  }

 private:
  std::size_t locate(double t) const {
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t j = it == times_.begin() ? 0 : (it - times_.begin()) - 1;
    return std::min(j, times_.size() - 1);
  }

  const ocp::TwoStageConfig& cfg_;
  ocp::TwoStageLayout lay_;
  int num_obs_;
  const nlp::WarmStart& prev_;
  std::vector<double> times_;
  std::vector<std::size_t> rows_;
  std::vector<double> steps_;
  std::vector<std::size_t> ellipse_rows_;
};

void resample_multipliers(const ocp::TwoStageConfig& cfg, int num_obstacles, int shift,
                          double prev_stage2_time, double new_stage2_time,
                          nlp::WarmStart& ws) {
  const ocp::TwoStageLayout lay(cfg.N1, cfg.N2);
  const MultiplierResampler old(cfg, num_obstacles, prev_stage2_time, ws);
  VectorXd lam(ws.eq_multipliers.size());
  VectorXd mu = VectorXd::Zero(ws.ineq_multipliers.size());
  const double origin = shift * cfg.t_s;
  const double dt2_new = new_stage2_time / cfg.N2;

  for (int c = 0; c < 3; ++c) {
    lam[lay.eq_init_row() + c] = old.lambda_at(origin, c);
    lam[lay.eq_stitch_row() + c] = old.lambda_at(origin + cfg.N1 * cfg.t_s, c);
    lam[lay.eq_terminal_row() + c] =
        ws.eq_multipliers[lay.eq_terminal_row() + c];
  }
  for (int n = 0; n < cfg.N1; ++n) {
    const double t = origin + n * cfg.t_s;
    for (int c = 0; c < 3; ++c) {
      lam[lay.eq_defect1_row(n) + c] = old.lambda_at(t, c);
    }
    for (int k = 0; k < num_obstacles; ++k) {
      mu[lay.ineq_ellipse1_row(n, num_obstacles) + k] = old.ellipse_at(t, k, cfg.t_s);
    }
    // The L1 rows live on the fixed grid only; advancing by `shift` divides
    // their weight, and rows sourced beyond the old fixed grid start fresh.
    const double rescale = std::pow(cfg.gamma, -shift);
    if (n + shift < cfg.N1) {
      for (int k = 0; k < 6; ++k) {
        mu[lay.ineq_slack_row(n, num_obstacles) + k] =
            rescale *
            ws.ineq_multipliers[lay.ineq_slack_row(n + shift, num_obstacles) + k];
      }
    }
  }
  for (int n = 0; n < cfg.N2; ++n) {
    const double t = origin + cfg.N1 * cfg.t_s + n * dt2_new;
    for (int c = 0; c < 3; ++c) {
      lam[lay.eq_defect2_row(n) + c] = old.lambda_at(t, c);
    }
    for (int k = 0; k < num_obstacles; ++k) {
      mu[lay.ineq_ellipse2_row(n, num_obstacles) + k] = old.ellipse_at(t, k, dt2_new);
    }
  }
  ws.eq_multipliers.swap(lam);
  ws.ineq_multipliers.swap(mu);
}

// Stage-1 slice of a solved plan.
State plan_state(const ocp::OcpSolution& sol, int n) { return sol.trajectory.states[n]; }

}  // namespace

MpcLog run_asap_mpc(const MpcConfig& config, const ocp::BoundarySpec& b,
                    const scene::Scene& scene, const ComputationTimeSource& ct) {
  config.validate();
  b.validate();
  scene.validate();
  ct.validate();

  const int n1 = config.two_stage.N1;
  const double t_s = config.two_stage.t_s;
  const int num_obstacles = static_cast<int>(scene.obstacles.size());

  MpcLog log;
  log.goal = b.s_tf;
  log.t_s = t_s;
  log.n1 = n1;

  State current = b.s_t0;
  if (model::max_component_distance(current, b.s_tf) < config.convergence_tol) {
    // Already at the goal; nothing to plan or execute.
    log.executed.times.push_back(0.0);
    log.executed.states.push_back(current);
    log.mission_time = 0.0;
    return log;
  }

  Phase phase = Phase::initial;
  double w1 = config.w1_initial;
  double w2 = config.w2_initial;
  double executed_end = 0.0;
  std::size_t injected_cursor = 0;
  bool have_prev = false;
  ocp::OcpSolution prev_plan;
  nlp::WarmStart warm;
  int last_n_update = n1;
  double last_t2 = 0.0;

  const auto arrival_time = [&]() {
    for (std::size_t i = 0; i < log.executed.states.size(); ++i) {
      if (model::max_component_distance(log.executed.states[i], b.s_tf) <
          config.convergence_tol) {
        return log.executed.times[i];
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  };

  for (int iteration = 1; iteration <= config.max_replannings; ++iteration) {
    const bool first = iteration == 1;
    if (!first && phase == Phase::initial &&
        should_switch_phase(last_t2, last_n_update, t_s)) {
      phase = Phase::end_phase;
      w1 = config.w1_end_phase;
      w2 = config.w2_end_phase;
      // Stale multipliers mislead the reweighted problem more than they help.
      warm = nlp::WarmStart{};
    }

    ocp::TwoStageConfig stage_cfg = config.two_stage;
    stage_cfg.w1 = w1;
    stage_cfg.w2 = w2;
    const ocp::BoundarySpec window{current, b.s_tf};
    const nlp::NlpProblem problem = ocp::build_two_stage(stage_cfg, window, scene);

    VectorXd x0;
    if (have_prev) {
      x0 = shift_warm_start(stage_cfg, prev_plan, last_n_update, b.s_tf);
      if (warm.eq_multipliers.size() == problem.num_eq()) {
        const double prev_t2 = prev_plan.stage2_time.value_or(0.0);
        const double new_t2 = std::max(0.0, prev_t2 - last_n_update * stage_cfg.t_s);
        resample_multipliers(stage_cfg, num_obstacles, last_n_update, prev_t2, new_t2,
                             warm);
      }
    } else {
      x0 = ocp::initial_guess(stage_cfg, window, scene.limits);
    }

    const nlp::SolveResult solved = nlp::solve(problem, x0, config.solver, &warm);
    if (solved.report.status != nlp::SolveStatus::converged) {
      log.status = RunStatus::solver_failure;
      log.message = "replanning " + std::to_string(iteration) + " ended with status " +
                    nlp::to_string(solved.report.status);
      log.mission_time = arrival_time();
      return log;
    }
    const ocp::OcpSolution plan =
        ocp::extract_solution(stage_cfg, solved.x, solved.report, b.s_tf);

    double t_comp = 0.0;
    int n_update = n1;
    if (!first) {
      if (ct.mode == ComputationTimeSource::Mode::measured) {
        t_comp = solved.report.solve_seconds;
      } else {
        t_comp = ct.injected[injected_cursor % ct.injected.size()];
        ++injected_cursor;
      }
      try {
        n_update = compute_update_index(t_comp, t_s, n1);
      } catch (const BudgetOverrunError& e) {
        log.status = RunStatus::budget_overrun;
        log.message = e.what();
        log.mission_time = arrival_time();
        return log;
      }
    } else if (ct.mode == ComputationTimeSource::Mode::measured) {
      t_comp = solved.report.solve_seconds;  // informative only
    }

    Replanning record;
    record.iteration = iteration;
    record.t_comp = t_comp;
    record.n_update = n_update;
    record.phase = phase;
    record.w1 = w1;
    record.w2 = w2;
    record.stage2_time = plan.stage2_time.value_or(0.0);
    record.stitch_time = executed_end;
    record.handoff_state = current;
    record.handoff_residual = model::max_component_distance(plan_state(plan, 0), current);
    record.planned = plan.trajectory;
    record.report = solved.report;
    log.replannings.push_back(std::move(record));

    // Execute the first n_update fixed-grid intervals of this plan. The
    // handoff state itself is already the last executed sample (or the
    // mission start), so appending begins at index 1.
    if (first) {
      log.executed.times.push_back(0.0);
      log.executed.states.push_back(current);
    }
    for (int n = 1; n <= n_update; ++n) {
      log.executed.times.push_back(executed_end + n * t_s);
      log.executed.states.push_back(plan_state(plan, n));
      log.executed.controls.push_back(plan.trajectory.controls[n - 1]);
    }
    executed_end += n_update * t_s;
    current = plan_state(plan, n_update);

    if (model::max_component_distance(current, b.s_tf) < config.convergence_tol) {
      // Mission complete: the last plan is never replaced, so its remaining
      // fixed-grid samples run out as-is.
      for (int n = n_update + 1; n <= n1; ++n) {
        log.executed.times.push_back(executed_end + (n - n_update) * t_s);
        log.executed.states.push_back(plan_state(plan, n));
        log.executed.controls.push_back(plan.trajectory.controls[n - 1]);
      }
      log.status = RunStatus::completed;
      log.mission_time = arrival_time();
      return log;
    }

    last_n_update = n_update;
    last_t2 = plan.stage2_time.value_or(0.0);
    prev_plan = plan;
    have_prev = true;
  }

  log.status = RunStatus::replanning_limit;
  log.message = "replanning limit reached before the goal";
  log.mission_time = arrival_time();
  return log;
}

std::vector<double> total_time_accounting(const MpcLog& log) {
  std::vector<double> estimates;
  estimates.reserve(log.replannings.size());
  for (const Replanning& r : log.replannings) {
    double plan_time = 0.0;
    if (r.stage2_time > ocp::kDegenerateStageTime) {
      plan_time = log.n1 * log.t_s + r.stage2_time;
    } else {
      // Stage 2 has collapsed; the plan's own duration is where its
      // fixed-grid part settles onto the goal.
      const Trajectory& planned = r.planned;
      Trajectory stage1;
      stage1.times.assign(planned.times.begin(), planned.times.begin() + log.n1 + 1);
      stage1.states.assign(planned.states.begin(), planned.states.begin() + log.n1 + 1);
      stage1.controls.assign(planned.controls.begin(), planned.controls.begin() + log.n1);
      const auto idx = ocp::stabilization_index(stage1, log.goal);
      plan_time = idx.value_or(log.n1) * log.t_s;
    }
    estimates.push_back(r.stitch_time + plan_time);
  }
  return estimates;
}

}  // namespace topt::mpc
