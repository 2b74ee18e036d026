#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "topt/model.hpp"

namespace topt::csv {

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 17 significant digits; round-trips doubles exactly.
std::string format_double(double v);

// Columns t,x,y,theta,v,omega; the final row has no control and leaves those
// cells empty. Times may repeat (zero-duration stage) but never decrease.
void write_trajectory(const std::filesystem::path& path, const model::Trajectory& traj);
model::Trajectory read_trajectory(const std::filesystem::path& path);

}  // namespace topt::csv
