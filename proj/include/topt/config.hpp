#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "topt/mpc.hpp"
#include "topt/ocp.hpp"
#include "topt/scene.hpp"

namespace topt::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MpcSection {
  double w1_initial = 1.0;
  double w2_initial = 1000.0;
  double w1_end_phase = 1000.0;
  double w2_end_phase = 1.0;
  double convergence_tol = 1e-6;
  int max_replannings = 500;
  std::vector<int> snapshots;  // replanning indices rendered as SVG
};

// One experiment: boundary pair, scene, whichever formulation sections the
// file provides, solver settings and output preferences. Key names carry
// units (… _m, _rad, _seconds) so the files self-document.
struct ScenarioConfig {
  std::string name = "scenario";
  ocp::BoundarySpec boundary;
  scene::Scene scene;
  std::optional<ocp::TimeScalingConfig> time_scaling;
  std::optional<ocp::ExpWeightConfig> exp_weight;
  std::optional<ocp::TwoStageConfig> two_stage;
  std::optional<MpcSection> mpc;
  nlp::SolverSettings solver;
  int compare_n_hi = 400;
  std::optional<std::filesystem::path> output_dir;
  std::optional<long> seed;  // reserved

  mpc::MpcConfig mpc_config() const;
};

// Parses the sectioned key=value format; throws ConfigError on unknown keys,
// malformed values or violated invariants.
ScenarioConfig load_config(const std::filesystem::path& path);

}  // namespace topt::cli
