#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "topt/config.hpp"

namespace topt::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitSolverFailure = 2;
inline constexpr int kExitBudgetOverrun = 3;
inline constexpr int kExitInfeasible = 4;

struct CommonOptions {
  std::optional<std::filesystem::path> out_dir;
  bool plots = true;
  std::optional<double> solver_tol;  // overrides both solver tolerances
};

struct MpcOptions {
  CommonOptions common;
  // "measured" or a path to a file with one solve duration (seconds) per
  // line, consumed cyclically.
  std::string times = "measured";
};

// Solve one formulation; writes trajectory.csv, summary.json and
// trajectory.svg into the output directory.
int cmd_solve(const std::filesystem::path& config_path, const std::string& formulation,
              const CommonOptions& options);

// Solve all three formulations plus the minimal-horizon search; writes
// compare.csv, compare_summary.json and the path/constraint plots.
int cmd_compare(const std::filesystem::path& config_path, const CommonOptions& options);

// Run the replanning loop; writes executed.csv, replannings.csv, snapshot
// plots and the final stage-1 control plot.
int cmd_mpc(const std::filesystem::path& config_path, const MpcOptions& options);

// Audit a trajectory CSV against a scenario's obstacles and limits; prints
// the feasibility report as JSON.
int cmd_check(const std::filesystem::path& trajectory_path,
              const std::filesystem::path& config_path, double tol = 1e-6);

}  // namespace topt::cli
