#include "topt/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace topt::csv {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trajectory(const std::filesystem::path& path, const model::Trajectory& traj) {
  traj.validate(/*allow_equal_times=*/true);
  std::ofstream out(path);
  if (!out) throw CsvError("cannot open " + path.string() + " for writing");
  out << "t,x,y,theta,v,omega\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out << format_double(traj.times[i]) << ',' << format_double(traj.states[i].x) << ','
        << format_double(traj.states[i].y) << ',' << format_double(traj.states[i].theta)
        << ',';
    if (i < traj.controls.size()) {
      out << format_double(traj.controls[i].v) << ','
          << format_double(traj.controls[i].omega);
    } else {
      out << ',';
    }
    out << '\n';
  }
  out.close();
  if (!out) throw CsvError("failed while writing " + path.string());
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, int line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw CsvError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

}  // namespace

model::Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty file " + path.string());
  if (split_fields(line) != std::vector<std::string>{"t", "x", "y", "theta", "v", "omega"}) {
    throw CsvError("unexpected header in " + path.string());
  }
  model::Trajectory traj;
  int line_no = 1;
  std::vector<std::string> pending_control;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_fields(line);
    if (f.size() != 6) {
      throw CsvError("line " + std::to_string(line_no) + ": expected 6 columns");
    }
    traj.times.push_back(parse_double(f[0], line_no));
    traj.states.push_back({parse_double(f[1], line_no), parse_double(f[2], line_no),
                           parse_double(f[3], line_no)});
    const bool has_control = !f[4].empty() || !f[5].empty();
    if (has_control) {
      traj.controls.push_back({parse_double(f[4], line_no), parse_double(f[5], line_no)});
    }
  }
  try {
    traj.validate(/*allow_equal_times=*/true);
  } catch (const std::exception& e) {
    throw CsvError(path.string() + ": " + e.what());
  }
  return traj;
}

}  // namespace topt::csv
