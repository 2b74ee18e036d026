#include <CLI11.hpp>
#include <string>

#include "topt/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"topt: time-optimal point-to-point motion planning toolkit"};
  app.require_subcommand(1);

  std::string config;
  std::string formulation;
  std::string trajectory;
  std::string times = "measured";
  double check_tol = 1e-6;
  topt::cli::CommonOptions common;
  std::string out_dir;
  bool no_plots = false;
  double solver_tol = 0.0;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_flag("--no-plots", no_plots, "skip SVG output");
    cmd->add_option("--solver-tol", solver_tol,
                    "override both solver tolerances")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* solve = app.add_subcommand("solve", "solve one formulation");
  solve->add_option("config", config, "scenario config file")->required();
  solve->add_option("--formulation", formulation, "time-scaling|exp-weight|two-stage")
      ->required();
  add_common(solve);

  CLI::App* compare = app.add_subcommand("compare", "compare all formulations");
  compare->add_option("config", config, "scenario config file")->required();
  add_common(compare);

  CLI::App* mpc = app.add_subcommand("mpc", "run the replanning loop");
  mpc->add_option("config", config, "scenario config file")->required();
  mpc->add_option("--times", times, "'measured' or a file of solve durations");
  add_common(mpc);

  CLI::App* check = app.add_subcommand("check", "audit a trajectory CSV");
  check->add_option("trajectory", trajectory, "trajectory CSV")->required();
  check->add_option("config", config, "scenario config file")->required();
  check->add_option("--tol", check_tol, "violation tolerance")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (!out_dir.empty()) common.out_dir = out_dir;
  common.plots = !no_plots;
  if (solver_tol > 0.0) common.solver_tol = solver_tol;

  if (solve->parsed()) {
    return topt::cli::cmd_solve(config, formulation, common);
  }
  if (compare->parsed()) {
    return topt::cli::cmd_compare(config, common);
  }
  if (mpc->parsed()) {
    topt::cli::MpcOptions options;
    options.common = common;
    options.times = times;
    return topt::cli::cmd_mpc(config, options);
  }
  if (check->parsed()) {
    return topt::cli::cmd_check(trajectory, config, check_tol);
  }
  return 1;
}
