#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "oracles.hpp"
#include "topt/cli.hpp"
#include "topt/csv.hpp"

using topt::cli::CommonOptions;
using topt::cli::MpcOptions;

namespace {

namespace fs = std::filesystem;

fs::path write_file(const fs::path& dir, const std::string& name,
                    const std::string& body) {
  const fs::path path = dir / name;
  std::ofstream out(path);
  out << body;
  return path;
}

const char* kCorridorConfig = R"(
# straight 1 m dash, no obstacle
[scenario]
name = corridor

[boundary]
x0_m = 0.0
y0_m = 0.0
theta0_rad = 0.0
xf_m = 1.0
yf_m = 0.0
thetaf_rad = 0.0

[limits]
v_min_mps = 0.0
v_max_mps = 0.5
omega_min_radps = -1.0471975511965976
omega_max_radps = 1.0471975511965976

[time_scaling]
n_steps = 16

[two_stage]
n1_steps = 8
n2_steps = 8
gamma = 1.025
t_s_seconds = 0.02
w1 = 0.0
w2 = 1.0

[mpc]
w1_initial = 1.0
w2_initial = 1000.0
w1_end_phase = 1000.0
w2_end_phase = 1.0
max_replannings = 400
)";

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing: full scenario and error paths") {
  oracles::TempDir tmp("topt_cli_cfg");
  const fs::path good = write_file(tmp.path, "good.cfg", kCorridorConfig);
  const auto cfg = topt::cli::load_config(good);
  CHECK(cfg.name == "corridor");
  CHECK(cfg.boundary.s_tf.x == 1.0);
  REQUIRE(cfg.time_scaling.has_value());
  CHECK(cfg.time_scaling->N == 16);
  REQUIRE(cfg.two_stage.has_value());
  CHECK(cfg.scene.obstacles.empty());

  const fs::path missing = write_file(tmp.path, "missing.cfg", "[boundary]\nx0_m = 0\n");
  CHECK_THROWS_AS(topt::cli::load_config(missing), topt::cli::ConfigError);

  const fs::path unknown = write_file(
      tmp.path, "unknown.cfg", std::string(kCorridorConfig) + "\n[boundary2]\nfoo = 1\n");
  CHECK_THROWS_AS(topt::cli::load_config(unknown), topt::cli::ConfigError);

  // Invariant breach: zero semi-axis.
  const fs::path bad_obstacle = write_file(
      tmp.path, "bad_obstacle.cfg",
      std::string(kCorridorConfig) +
          "\n[obstacle]\nx_e_m = 0.5\ny_e_m = 0\na_e_m = 0.0\nb_e_m = 1\ntheta_e_rad = 0\n");
  CHECK_THROWS_AS(topt::cli::load_config(bad_obstacle), topt::cli::ConfigError);
}

TEST_CASE("csv trajectories round-trip bit-exactly") {
  oracles::TempDir tmp("topt_cli_csv");
  const std::vector<topt::model::Control> controls(7, {0.43, -0.617283945617283});
  const auto traj = topt::model::rollout({0.1, -0.2, 0.31}, controls, 0.02);
  const fs::path path = tmp.path / "traj.csv";
  topt::csv::write_trajectory(path, traj);
  const auto back = topt::csv::read_trajectory(path);
  REQUIRE(back.times.size() == traj.times.size());
  REQUIRE(back.controls.size() == traj.controls.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    CHECK(back.times[i] == traj.times[i]);
    CHECK(back.states[i].x == traj.states[i].x);
    CHECK(back.states[i].y == traj.states[i].y);
    CHECK(back.states[i].theta == traj.states[i].theta);
  }
  for (std::size_t i = 0; i < traj.controls.size(); ++i) {
    CHECK(back.controls[i].v == traj.controls[i].v);
    CHECK(back.controls[i].omega == traj.controls[i].omega);
  }
}

TEST_CASE("cmd_solve writes artifacts and cmd_check accepts them") {
  oracles::TempDir tmp("topt_cli_solve");
  const fs::path cfg = write_file(tmp.path, "scenario.cfg", kCorridorConfig);
  CommonOptions options;
  options.out_dir = tmp.path / "out";

  CHECK(topt::cli::cmd_solve(cfg, "time-scaling", options) == topt::cli::kExitOk);
  CHECK(fs::exists(*options.out_dir / "trajectory.csv"));
  CHECK(fs::exists(*options.out_dir / "summary.json"));
  CHECK(fs::exists(*options.out_dir / "trajectory.svg"));

  const auto summary =
      nlohmann::json::parse(read_file(*options.out_dir / "summary.json"));
  CHECK(summary["schema_version"] == 1);
  CHECK(summary["status"] == "converged");
  CHECK(summary["total_time_seconds"].get<double>() == doctest::Approx(2.0).epsilon(1e-2));

  CHECK(topt::cli::cmd_check(*options.out_dir / "trajectory.csv", cfg) ==
        topt::cli::kExitOk);

  // Unknown formulation and missing section are config errors.
  CHECK(topt::cli::cmd_solve(cfg, "nonsense", options) == topt::cli::kExitConfigError);
  CHECK(topt::cli::cmd_solve(cfg, "exp-weight", options) == topt::cli::kExitConfigError);
}

TEST_CASE("cmd_solve: stationary boundary pair reports zero total time") {
  oracles::TempDir tmp("topt_cli_degenerate");
  std::string body = kCorridorConfig;
  const auto pos = body.find("xf_m = 1.0");
  body.replace(pos, 10, "xf_m = 0.0");
  const fs::path cfg = write_file(tmp.path, "degenerate.cfg", body);
  CommonOptions options;
  options.out_dir = tmp.path / "out";
  CHECK(topt::cli::cmd_solve(cfg, "two-stage", options) == topt::cli::kExitOk);
  const auto summary =
      nlohmann::json::parse(read_file(*options.out_dir / "summary.json"));
  CHECK(std::abs(summary["total_time_seconds"].get<double>()) <= 1e-6);
}

TEST_CASE("--no-plots changes files, not numbers") {
  oracles::TempDir tmp("topt_cli_noplots");
  const fs::path cfg = write_file(tmp.path, "scenario.cfg", kCorridorConfig);
  CommonOptions with_plots;
  with_plots.out_dir = tmp.path / "a";
  CommonOptions without_plots;
  without_plots.out_dir = tmp.path / "b";
  without_plots.plots = false;
  CHECK(topt::cli::cmd_solve(cfg, "time-scaling", with_plots) == topt::cli::kExitOk);
  CHECK(topt::cli::cmd_solve(cfg, "time-scaling", without_plots) == topt::cli::kExitOk);
  CHECK(fs::exists(tmp.path / "a" / "trajectory.svg"));
  CHECK_FALSE(fs::exists(tmp.path / "b" / "trajectory.svg"));
  CHECK(read_file(tmp.path / "a" / "trajectory.csv") ==
        read_file(tmp.path / "b" / "trajectory.csv"));
}

TEST_CASE("cmd_check exit codes: infeasible and malformed inputs") {
  oracles::TempDir tmp("topt_cli_check");
  std::string body = kCorridorConfig;
  body += "\n[obstacle]\nx_e_m = 0.5\ny_e_m = 0.0\na_e_m = 0.2\nb_e_m = 0.1\n"
          "theta_e_rad = 0.0\n";
  const fs::path cfg = write_file(tmp.path, "scenario.cfg", body);

  // Straight through the obstacle center.
  const fs::path through = write_file(tmp.path, "through.csv",
                                      "t,x,y,theta,v,omega\n"
                                      "0,0,0,0,0.5,0\n"
                                      "1,0.5,0,0,0.5,0\n"
                                      "2,1,0,0,,\n");
  CHECK(topt::cli::cmd_check(through, cfg) == topt::cli::kExitInfeasible);

  const fs::path backwards = write_file(tmp.path, "backwards.csv",
                                        "t,x,y,theta,v,omega\n"
                                        "0.5,0,0,0,0.5,0\n"
                                        "0.0,1,0,0,,\n");
  CHECK(topt::cli::cmd_check(backwards, cfg) == topt::cli::kExitConfigError);

  const fs::path garbled = write_file(tmp.path, "garbled.csv", "nope\n");
  CHECK(topt::cli::cmd_check(garbled, cfg) == topt::cli::kExitConfigError);
}

TEST_CASE("cmd_mpc: injected runs, determinism, and budget overruns") {
  oracles::TempDir tmp("topt_cli_mpc");
  std::string body = kCorridorConfig;
  const auto pos = body.find("xf_m = 1.0");
  body.replace(pos, 10, "xf_m = 0.2");
  const fs::path cfg = write_file(tmp.path, "scenario.cfg", body);
  const fs::path times = write_file(tmp.path, "times.txt", "0.02\n");

  MpcOptions options;
  options.common.out_dir = tmp.path / "a";
  options.times = times.string();
  CHECK(topt::cli::cmd_mpc(cfg, options) == topt::cli::kExitOk);
  CHECK(fs::exists(tmp.path / "a" / "executed.csv"));
  CHECK(fs::exists(tmp.path / "a" / "replannings.csv"));
  CHECK(fs::exists(tmp.path / "a" / "mpc_summary.json"));

  MpcOptions repeat = options;
  repeat.common.out_dir = tmp.path / "b";
  CHECK(topt::cli::cmd_mpc(cfg, repeat) == topt::cli::kExitOk);
  CHECK(read_file(tmp.path / "a" / "executed.csv") ==
        read_file(tmp.path / "b" / "executed.csv"));
  CHECK(read_file(tmp.path / "a" / "replannings.csv") ==
        read_file(tmp.path / "b" / "replannings.csv"));

  // One injected duration beyond the stage-1 budget (8 * 0.02 s).
  const fs::path slow = write_file(tmp.path, "slow.txt", "0.6\n");
  MpcOptions overrun = options;
  overrun.common.out_dir = tmp.path / "c";
  overrun.times = slow.string();
  CHECK(topt::cli::cmd_mpc(cfg, overrun) == topt::cli::kExitBudgetOverrun);

  MpcOptions bad_times = options;
  bad_times.times = (tmp.path / "missing.txt").string();
  CHECK(topt::cli::cmd_mpc(cfg, bad_times) == topt::cli::kExitConfigError);
}
