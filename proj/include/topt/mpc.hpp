#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "topt/ocp.hpp"

namespace topt::mpc {

struct MpcConfig {
  ocp::TwoStageConfig two_stage;  // w1/w2 are driven by the phase weights below
  double w1_initial = 1.0;
  double w2_initial = 1000.0;
  double w1_end_phase = 1000.0;
  double w2_end_phase = 1.0;
  double convergence_tol = 1e-6;  // componentwise arrival threshold
  int max_replannings = 500;
  nlp::SolverSettings solver;

  void validate() const;
};

// Where solve durations come from: wall-clock measurement of each solve, or
// an injected list (cycled) for reproducible runs.
struct ComputationTimeSource {
  enum class Mode { measured, injected };
  Mode mode = Mode::measured;
  std::vector<double> injected;

  static ComputationTimeSource measured() { return {}; }
  static ComputationTimeSource from_durations(std::vector<double> durations);

  void validate() const;
};

struct BudgetOverrunError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ceil(t_comp / t_s), floored at 1: the number of sampling intervals the
// executing plan advances while a solve runs. Results beyond N1 mean the
// solve outran stage 1 and violate the stitching contract.
int compute_update_index(double t_comp, double t_s, int n1);

// The replanning total time drops to stage 1 alone once T2 <= n_update * t_s.
bool should_switch_phase(double t2, int n_update, double t_s);

enum class Phase { initial, end_phase };
enum class RunStatus { completed, budget_overrun, solver_failure, replanning_limit };

const char* to_string(RunStatus s);

struct Replanning {
  int iteration = 0;   // 1-based
  double t_comp = 0.0; // seconds; 0 for the first plan in injected mode
  int n_update = 0;
  Phase phase = Phase::initial;
  double w1 = 0.0;
  double w2 = 0.0;
  double stage2_time = 0.0;
  double stitch_time = 0.0;  // mission time when this plan starts executing
  // Plant state the plan was asked to continue from (equals the executed
  // sample at stitch_time).
  model::State handoff_state;
  // Max-norm gap between the solved first state and the handoff state.
  double handoff_residual = 0.0;
  model::Trajectory planned;  // both stages, stitch state deduplicated
  nlp::SolverReport report;
};

struct MpcLog {
  RunStatus status = RunStatus::completed;
  std::string message;
  std::vector<Replanning> replannings;
  model::Trajectory executed;
  // First executed timestamp within convergence_tol of the goal; NaN until
  // the mission completes.
  double mission_time = std::numeric_limits<double>::quiet_NaN();
  model::State goal;
  double t_s = 0.0;
  int n1 = 0;

  // Worst max-norm mismatch between a plan's handoff state and the executed
  // sample at its stitch instant (plus any stitch-grid misalignment).
  double max_stitch_discontinuity() const;
  void check_consistency(double tol = 1e-9) const;
};

// Repeated two-stage solves with asynchronous stitching: each solve's
// duration picks the future plan state where the next plan takes over, the
// plant is assumed to track planned states exactly, and the weights flip to
// the end-phase set once stage 2 collapses. The first solve hands off at the
// full stage-1 horizon. On normal completion the last plan's remaining
// fixed-grid samples are appended so the executed trajectory parks at the
// goal. Failures return the partial log.
MpcLog run_asap_mpc(const MpcConfig& config, const ocp::BoundarySpec& b,
                    const scene::Scene& scene, const ComputationTimeSource& ct);

// Mission-duration estimate per replanning: executed time at the stitch plus
// the plan's own total time (stage-1 arrival time when stage 2 has
// collapsed). Near-constant across replannings when the solves stay
// time-optimal.
std::vector<double> total_time_accounting(const MpcLog& log);

}  // namespace topt::mpc
