#include "topt/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "topt/csv.hpp"
#include "topt/svg_plot.hpp"

namespace topt::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kTimeScalingName = "time-scaling";
constexpr const char* kExpWeightName = "exp-weight";
constexpr const char* kTwoStageName = "two-stage";

fs::path resolve_out_dir(const ScenarioConfig& cfg, const CommonOptions& options) {
  fs::path dir = options.out_dir ? *options.out_dir
                                 : cfg.output_dir.value_or(fs::current_path());
  fs::create_directories(dir);
  return dir;
}

void apply_solver_override(ScenarioConfig& cfg, const CommonOptions& options) {
  if (options.solver_tol) {
    cfg.solver.kkt_tolerance = *options.solver_tol;
    cfg.solver.constraint_tolerance = *options.solver_tol;
    cfg.solver.validate();
  }
}

json audit_json(const scene::FeasibilityReport& report) {
  json j;
  j["max_ellipse_violation"] = report.max_ellipse_violation;
  j["max_v_violation"] = report.max_v_violation;
  j["max_omega_violation"] = report.max_omega_violation;
  j["worst_time"] = std::isnan(report.worst_time) ? json(nullptr) : json(report.worst_time);
  j["tol"] = report.tol;
  j["num_samples"] = report.ellipse_values.size();
  return j;
}

json solution_json(const ScenarioConfig& cfg, const std::string& formulation,
                   const ocp::OcpSolution& sol, const scene::FeasibilityReport& audit) {
  json j;
  j["schema_version"] = 1;
  j["scenario"] = cfg.name;
  j["formulation"] = formulation;
  j["status"] = nlp::to_string(sol.report.status);
  j["total_time_seconds"] = sol.total_time;
  if (sol.stage2_time) {
    j["stage2_time_seconds"] = *sol.stage2_time;
    j["stage2_degenerate"] = sol.stage2_degenerate;
  }
  j["objective"] = sol.objective;
  j["solve_seconds"] = sol.report.solve_seconds;
  j["outer_iterations"] = sol.report.outer_iterations;
  j["inner_iterations"] = sol.report.inner_iterations;
  j["max_eq_violation"] = sol.report.max_eq_violation;
  j["max_ineq_violation"] = sol.report.max_ineq_violation;
  j["stationarity"] = sol.report.stationarity;
  j["audit"] = audit_json(audit);
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

svg::Series path_series(const model::Trajectory& traj, std::string label,
                        std::string color, bool dashed = false) {
  svg::Series s;
  s.label = std::move(label);
  s.color = std::move(color);
  s.dashed = dashed;
  for (const model::State& st : traj.states) {
    s.xs.push_back(st.x);
    s.ys.push_back(st.y);
  }
  return s;
}

std::vector<svg::Marker> boundary_markers(const ocp::BoundarySpec& b) {
  return {{"start", "#c03030", b.s_t0.x, b.s_t0.y},
          {"goal", "#2040c0", b.s_tf.x, b.s_tf.y}};
}

void write_path_plot(const fs::path& path, const ScenarioConfig& cfg,
                     const std::vector<svg::Series>& series) {
  svg::PlotOptions opt;
  opt.title = cfg.name;
  opt.x_label = "x [m]";
  opt.y_label = "y [m]";
  opt.equal_aspect = true;
  opt.obstacles = cfg.scene.obstacles;
  svg::write_plot(path, series, boundary_markers(cfg.boundary), opt);
}

struct SolveOutcome {
  ocp::OcpSolution solution;
};

SolveOutcome run_time_scaling(const ScenarioConfig& cfg) {
  const auto problem = ocp::build_time_scaling(*cfg.time_scaling, cfg.boundary, cfg.scene);
  const auto x0 = ocp::initial_guess(*cfg.time_scaling, cfg.boundary, cfg.scene.limits);
  const auto result = nlp::solve(problem, x0, cfg.solver);
  return {ocp::extract_solution(*cfg.time_scaling, result.x, result.report)};
}

SolveOutcome run_exp_weight(const ScenarioConfig& cfg) {
  const auto problem = ocp::build_exp_weight(*cfg.exp_weight, cfg.boundary, cfg.scene);
  const auto x0 = ocp::initial_guess(*cfg.exp_weight, cfg.boundary, cfg.scene.limits);
  const auto result = nlp::solve(problem, x0, cfg.solver);
  return {ocp::extract_solution(*cfg.exp_weight, result.x, result.report,
                                cfg.boundary.s_tf)};
}

SolveOutcome run_two_stage(const ScenarioConfig& cfg) {
  const auto problem = ocp::build_two_stage(*cfg.two_stage, cfg.boundary, cfg.scene);
  const auto x0 = ocp::initial_guess(*cfg.two_stage, cfg.boundary, cfg.scene.limits);
  const auto result = nlp::solve(problem, x0, cfg.solver);
  return {ocp::extract_solution(*cfg.two_stage, result.x, result.report,
                                cfg.boundary.s_tf)};
}

int config_error(const std::exception& e) {
  std::cerr << "config error: " << e.what() << '\n';
  return kExitConfigError;
}

}  // namespace

int cmd_solve(const fs::path& config_path, const std::string& formulation,
              const CommonOptions& options) {
  ScenarioConfig cfg;
  try {
    cfg = load_config(config_path);
    apply_solver_override(cfg, options);
  } catch (const std::exception& e) {
    return config_error(e);
  }

  SolveOutcome outcome;
  try {
    if (formulation == kTimeScalingName) {
      if (!cfg.time_scaling) throw ConfigError("config lacks a [time_scaling] section");
      outcome = run_time_scaling(cfg);
    } else if (formulation == kExpWeightName) {
      if (!cfg.exp_weight) throw ConfigError("config lacks an [exp_weight] section");
      outcome = run_exp_weight(cfg);
    } else if (formulation == kTwoStageName) {
      if (!cfg.two_stage) throw ConfigError("config lacks a [two_stage] section");
      outcome = run_two_stage(cfg);
    } else {
      throw ConfigError("unknown formulation '" + formulation + "'");
    }
  } catch (const ConfigError& e) {
    return config_error(e);
  }

  const ocp::OcpSolution& sol = outcome.solution;
  const auto audit = scene::audit_trajectory(sol.trajectory, cfg.scene);
  const fs::path dir = resolve_out_dir(cfg, options);
  csv::write_trajectory(dir / "trajectory.csv", sol.trajectory);
  write_json(dir / "summary.json", solution_json(cfg, formulation, sol, audit));
  if (options.plots) {
    write_path_plot(dir / "trajectory.svg", cfg,
                    {path_series(sol.trajectory, formulation, "#1f6fb2")});
  }
  if (sol.report.status != nlp::SolveStatus::converged) {
    std::cerr << "solver finished with status " << nlp::to_string(sol.report.status)
              << '\n';
    return kExitSolverFailure;
  }
  return kExitOk;
}

int cmd_compare(const fs::path& config_path, const CommonOptions& options) {
  ScenarioConfig cfg;
  try {
    cfg = load_config(config_path);
    apply_solver_override(cfg, options);
    if (!cfg.time_scaling || !cfg.exp_weight || !cfg.two_stage) {
      throw ConfigError("compare needs [time_scaling], [exp_weight] and [two_stage]");
    }
  } catch (const std::exception& e) {
    return config_error(e);
  }

  const double t_s = cfg.exp_weight->t_s;
  const double window = cfg.two_stage->N1 * cfg.two_stage->t_s;

  const SolveOutcome ts = run_time_scaling(cfg);
  const SolveOutcome ew = run_exp_weight(cfg);
  const SolveOutcome st = run_two_stage(cfg);
  const ocp::MinHorizonResult horizon = ocp::min_horizon_search(
      cfg.boundary, cfg.scene, t_s, cfg.compare_n_hi, cfg.solver);

  // The interpolation-error exhibit: the free-grid solution resampled onto
  // the control grid, plus the forward simulation under those controls.
  const auto resampled = scene::resample_linear(ts.solution.trajectory, t_s);
  const auto simulated =
      scene::simulate_with_resampled_controls(ts.solution.trajectory, t_s);
  const auto early_violation = [&](const model::Trajectory& traj) {
    return scene::audit_trajectory(scene::clip_to_time(traj, window), cfg.scene)
        .max_ellipse_violation;
  };
  const double viol_ts_resampled = early_violation(resampled);
  const double viol_ts_simulated = early_violation(simulated);
  const double viol_ew = early_violation(ew.solution.trajectory);
  const double viol_st = early_violation(st.solution.trajectory);

  const fs::path dir = resolve_out_dir(cfg, options);
  {
    std::ofstream out(dir / "compare.csv");
    out << "formulation,total_time_seconds,solve_seconds,"
           "max_ellipse_violation_first_stage1_window\n";
    const auto row = [&](const std::string& name, const ocp::OcpSolution& sol,
                         double viol) {
      out << name << ',' << csv::format_double(sol.total_time) << ','
          << csv::format_double(sol.report.solve_seconds) << ','
          << csv::format_double(viol) << '\n';
    };
    row("time_scaling", ts.solution, viol_ts_resampled);
    row("time_scaling_simulated", ts.solution, viol_ts_simulated);
    row("exp_weight", ew.solution, viol_ew);
    row("two_stage", st.solution, viol_st);
  }

  json summary;
  summary["schema_version"] = 1;
  summary["scenario"] = cfg.name;
  summary["n_star"] = horizon.n_star;
  summary["n_star_status"] = horizon.status == ocp::MinHorizonStatus::found
                                 ? "found"
                                 : "infeasible_at_upper_bound";
  summary["n_star_probes"] = horizon.probes;
  const auto fill = [&](const char* key, const ocp::OcpSolution& sol, double viol) {
    json j;
    j["status"] = nlp::to_string(sol.report.status);
    j["total_time_seconds"] = sol.total_time;
    j["objective"] = sol.objective;
    j["solve_seconds"] = sol.report.solve_seconds;
    j["max_ellipse_violation_window"] = viol;
    if (sol.stage2_time) j["stage2_time_seconds"] = *sol.stage2_time;
    summary[key] = j;
  };
  fill("time_scaling", ts.solution, viol_ts_resampled);
  fill("exp_weight", ew.solution, viol_ew);
  fill("two_stage", st.solution, viol_st);
  summary["time_scaling_simulated_violation"] = viol_ts_simulated;
  write_json(dir / "compare_summary.json", summary);

  if (options.plots) {
    write_path_plot(dir / "paths.svg", cfg,
                    {path_series(ts.solution.trajectory, "time-scaling", "#1f6fb2"),
                     path_series(ew.solution.trajectory, "exp-weight", "#2a9d3a"),
                     path_series(st.solution.trajectory, "two-stage", "#d06010", true)});

    const auto constraint_series = [&](const model::Trajectory& traj, std::string label,
                                       std::string color, bool dashed) {
      const auto clipped = scene::clip_to_time(traj, window);
      const auto audit = scene::audit_trajectory(clipped, cfg.scene);
      svg::Series s;
      s.label = std::move(label);
      s.color = std::move(color);
      s.dashed = dashed;
      s.xs = clipped.times;
      s.ys = audit.ellipse_values;
      return s;
    };
    svg::PlotOptions opt;
    opt.title = "collision constraint, first stage-1 window";
    opt.x_label = "t [s]";
    opt.y_label = "constraint value";
    opt.hlines = {0.0};
    svg::write_plot(
        dir / "constraint.svg",
        {constraint_series(st.solution.trajectory, "two-stage", "#d06010", false),
         constraint_series(ew.solution.trajectory, "exp-weight", "#2a9d3a", false),
         constraint_series(resampled, "time-scaling interpolated", "#1f6fb2", false),
         constraint_series(simulated, "time-scaling simulated", "#7a4fb2", true)},
        {}, opt);
  }

  const bool all_converged =
      ts.solution.report.status == nlp::SolveStatus::converged &&
      ew.solution.report.status == nlp::SolveStatus::converged &&
      st.solution.report.status == nlp::SolveStatus::converged &&
      horizon.status == ocp::MinHorizonStatus::found;
  if (!all_converged) {
    std::cerr << "compare: at least one formulation did not converge\n";
    return kExitSolverFailure;
  }
  return kExitOk;
}

namespace {

std::vector<double> load_durations(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open times file " + path.string());
  std::vector<double> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    bool blank = true;
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    }
    if (blank) continue;
    try {
      out.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw ConfigError("times file line " + std::to_string(line_no) + ": bad number");
    }
  }
  if (out.empty()) throw ConfigError("times file " + path.string() + " is empty");
  return out;
}

void write_replannings_csv(const fs::path& path, const mpc::MpcLog& log) {
  const std::vector<double> estimates = mpc::total_time_accounting(log);
  std::ofstream out(path);
  out << "iteration,t_comp,n_update,t2,total_time_estimate\n";
  for (std::size_t i = 0; i < log.replannings.size(); ++i) {
    const mpc::Replanning& r = log.replannings[i];
    out << r.iteration << ',' << csv::format_double(r.t_comp) << ',' << r.n_update << ','
        << csv::format_double(r.stage2_time) << ',' << csv::format_double(estimates[i])
        << '\n';
  }
}

void write_snapshot(const fs::path& path, const ScenarioConfig& cfg,
                    const mpc::MpcLog& log, const mpc::Replanning& r) {
  // Executed so far, the plan's remaining fixed-grid part, and its free-grid
  // tail, as of the moment this plan was stitched.
  model::Trajectory executed;
  for (std::size_t i = 0; i < log.executed.times.size(); ++i) {
    if (log.executed.times[i] > r.stitch_time + 1e-12) break;
    executed.times.push_back(log.executed.times[i]);
    executed.states.push_back(log.executed.states[i]);
    if (i > 0) executed.controls.push_back(log.executed.controls[i - 1]);
  }
  model::Trajectory stage1;
  model::Trajectory stage2;
  for (std::size_t i = 0; i < r.planned.states.size(); ++i) {
    auto& part = i <= static_cast<std::size_t>(log.n1) ? stage1 : stage2;
    part.states.push_back(r.planned.states[i]);
  }

  svg::Series exec_s = path_series(executed, "executed", "#000000");
  svg::Series s1;
  s1.label = "stage 1";
  s1.color = "#c03030";
  s1.dashed = true;
  for (const model::State& s : stage1.states) {
    s1.xs.push_back(s.x);
    s1.ys.push_back(s.y);
  }
  svg::Series s2;
  s2.label = "stage 2";
  s2.color = "#2040c0";
  s2.dashed = true;
  for (const model::State& s : stage2.states) {
    s2.xs.push_back(s.x);
    s2.ys.push_back(s.y);
  }
  svg::PlotOptions opt;
  opt.title = cfg.name + ", replanning " + std::to_string(r.iteration);
  opt.x_label = "x [m]";
  opt.y_label = "y [m]";
  opt.equal_aspect = true;
  opt.obstacles = cfg.scene.obstacles;
  svg::write_plot(path, {exec_s, s1, s2}, boundary_markers(cfg.boundary), opt);
}

void write_final_controls(const fs::path& path, const ScenarioConfig& cfg,
                          const mpc::MpcLog& log) {
  const mpc::Replanning& last = log.replannings.back();
  svg::Series v;
  v.label = "v [m/s]";
  v.color = "#1f6fb2";
  v.style = svg::LineStyle::steps;
  svg::Series w;
  w.label = "omega [rad/s]";
  w.color = "#d06010";
  w.style = svg::LineStyle::steps;
  for (int n = 0; n < log.n1; ++n) {
    const double t = last.stitch_time + n * log.t_s;
    v.xs.push_back(t);
    v.ys.push_back(last.planned.controls[n].v);
    w.xs.push_back(t);
    w.ys.push_back(last.planned.controls[n].omega);
  }
  svg::PlotOptions opt;
  opt.title = "stage-1 controls, final replanning";
  opt.x_label = "t [s]";
  opt.y_label = "input";
  opt.hlines = {cfg.scene.limits.v_min, cfg.scene.limits.v_max,
                cfg.scene.limits.omega_min, cfg.scene.limits.omega_max};
  svg::write_plot(path, {v, w}, {}, opt);
}

}  // namespace

int cmd_mpc(const fs::path& config_path, const MpcOptions& options) {
  ScenarioConfig cfg;
  mpc::ComputationTimeSource ct;
  try {
    cfg = load_config(config_path);
    apply_solver_override(cfg, options.common);
    if (!cfg.two_stage || !cfg.mpc) {
      throw ConfigError("mpc needs [two_stage] and [mpc] sections");
    }
    if (options.times != "measured") {
      ct = mpc::ComputationTimeSource::from_durations(load_durations(options.times));
    }
  } catch (const std::exception& e) {
    return config_error(e);
  }

  const mpc::MpcLog log = mpc::run_asap_mpc(cfg.mpc_config(), cfg.boundary, cfg.scene, ct);

  const fs::path dir = resolve_out_dir(cfg, options.common);
  csv::write_trajectory(dir / "executed.csv", log.executed);
  write_replannings_csv(dir / "replannings.csv", log);
  if (options.common.plots && !log.replannings.empty()) {
    for (int idx : cfg.mpc->snapshots) {
      if (idx >= 1 && idx <= static_cast<int>(log.replannings.size())) {
        write_snapshot(dir / ("snapshot_" + std::to_string(idx) + ".svg"), cfg, log,
                       log.replannings[idx - 1]);
      }
    }
    write_snapshot(dir / "snapshot_final.svg", cfg, log, log.replannings.back());
    write_final_controls(dir / "final_controls.svg", cfg, log);
  }

  json summary;
  summary["schema_version"] = 1;
  summary["scenario"] = cfg.name;
  summary["status"] = mpc::to_string(log.status);
  summary["replannings"] = log.replannings.size();
  summary["mission_time_seconds"] =
      std::isnan(log.mission_time) ? json(nullptr) : json(log.mission_time);
  summary["executed_duration_seconds"] = log.executed.duration();
  if (!log.replannings.empty()) {
    summary["first_plan_total_time_seconds"] =
        mpc::total_time_accounting(log).front();
  }
  if (!log.message.empty()) summary["message"] = log.message;
  write_json(dir / "mpc_summary.json", summary);

  switch (log.status) {
    case mpc::RunStatus::completed:
      return kExitOk;
    case mpc::RunStatus::budget_overrun:
      std::cerr << "mpc: " << log.message << '\n';
      return kExitBudgetOverrun;
    case mpc::RunStatus::solver_failure:
    case mpc::RunStatus::replanning_limit:
      std::cerr << "mpc: " << log.message << '\n';
      return kExitSolverFailure;
  }
  return kExitSolverFailure;
}

int cmd_check(const fs::path& trajectory_path, const fs::path& config_path, double tol) {
  ScenarioConfig cfg;
  model::Trajectory traj;
  try {
    cfg = load_config(config_path);
  } catch (const std::exception& e) {
    return config_error(e);
  }
  try {
    traj = csv::read_trajectory(trajectory_path);
  } catch (const std::exception& e) {
    std::cerr << "trajectory error: " << e.what() << '\n';
    return kExitConfigError;
  }
  const auto report = scene::audit_trajectory(traj, cfg.scene, tol);
  json j = audit_json(report);
  j["feasible"] = report.feasible();
  std::cout << j.dump(2) << '\n';
  return report.feasible() ? kExitOk : kExitInfeasible;
}

}  // namespace topt::cli
