#include "topt/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace topt::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

struct Section {
  std::string name;
  int line = 0;
  std::map<std::string, std::string> values;
  std::set<std::string> consumed;
};

class Parser {
 public:
  explicit Parser(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::string line;
    Section* current = nullptr;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string text = trim(line);
      if (text.empty()) continue;
      if (text.front() == '[') {
        if (text.back() != ']') {
          throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
        }
        sections_.push_back({trim(text.substr(1, text.size() - 2)), line_no, {}, {}});
        current = &sections_.back();
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string::npos || current == nullptr) {
        throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
      }
      const std::string key = trim(text.substr(0, eq));
      const std::string value = trim(text.substr(eq + 1));
      if (key.empty() || value.empty()) {
        throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
      }
      if (!current->values.emplace(key, value).second) {
        throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " + key);
      }
    }
  }

  std::vector<Section*> sections(const std::string& name) {
    std::vector<Section*> out;
    for (Section& s : sections_) {
      if (s.name == name) out.push_back(&s);
    }
    return out;
  }

  Section* unique_section(const std::string& name) {
    const auto all = sections(name);
    if (all.size() > 1) throw ConfigError("section [" + name + "] appears more than once");
    return all.empty() ? nullptr : all.front();
  }

  void finish() const {
    static const std::set<std::string> known = {
        "scenario", "boundary", "limits",  "obstacle", "time_scaling",
        "exp_weight", "two_stage", "mpc",  "solver",   "compare",
        "output",   "random"};
    for (const Section& s : sections_) {
      if (!known.count(s.name)) {
        throw ConfigError("unknown section [" + s.name + "] at line " +
                          std::to_string(s.line));
      }
      for (const auto& [key, value] : s.values) {
        if (!s.consumed.count(key)) {
          throw ConfigError("unknown key '" + key + "' in section [" + s.name + "]");
        }
      }
    }
  }

 private:
  std::vector<Section> sections_;
};

double get_double(Section& s, const std::string& key) {
  const auto it = s.values.find(key);
  if (it == s.values.end()) {
    throw ConfigError("missing key '" + key + "' in section [" + s.name + "]");
  }
  s.consumed.insert(key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' in [" + s.name + "]: bad number '" +
                      it->second + "'");
  }
}

double get_double_or(Section& s, const std::string& key, double fallback) {
  if (!s.values.count(key)) return fallback;
  return get_double(s, key);
}

int get_int(Section& s, const std::string& key) {
  const double v = get_double(s, key);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw ConfigError("key '" + key + "' in [" + s.name + "] must be an integer");
  }
  return i;
}

int get_int_or(Section& s, const std::string& key, int fallback) {
  if (!s.values.count(key)) return fallback;
  return get_int(s, key);
}

std::string get_string(Section& s, const std::string& key) {
  const auto it = s.values.find(key);
  if (it == s.values.end()) {
    throw ConfigError("missing key '" + key + "' in section [" + s.name + "]");
  }
  s.consumed.insert(key);
  return it->second;
}

std::vector<int> get_int_list(Section& s, const std::string& key) {
  std::vector<int> out;
  if (!s.values.count(key)) return out;
  const std::string raw = get_string(s, key);
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': bad integer '" + item + "'");
    }
  }
  return out;
}

}  // namespace

mpc::MpcConfig ScenarioConfig::mpc_config() const {
  if (!two_stage || !mpc) {
    throw ConfigError("scenario '" + name + "' lacks [two_stage] or [mpc] sections");
  }
  mpc::MpcConfig cfg;
  cfg.two_stage = *two_stage;
  cfg.w1_initial = mpc->w1_initial;
  cfg.w2_initial = mpc->w2_initial;
  cfg.w1_end_phase = mpc->w1_end_phase;
  cfg.w2_end_phase = mpc->w2_end_phase;
  cfg.convergence_tol = mpc->convergence_tol;
  cfg.max_replannings = mpc->max_replannings;
  cfg.solver = solver;
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  Parser parser(path);
  ScenarioConfig cfg;

  if (Section* s = parser.unique_section("scenario")) {
    if (s->values.count("name")) cfg.name = get_string(*s, "name");
  }

  Section* boundary = parser.unique_section("boundary");
  if (boundary == nullptr) throw ConfigError("missing [boundary] section");
  cfg.boundary.s_t0 = {get_double(*boundary, "x0_m"), get_double(*boundary, "y0_m"),
                       get_double(*boundary, "theta0_rad")};
  cfg.boundary.s_tf = {get_double(*boundary, "xf_m"), get_double(*boundary, "yf_m"),
                       get_double(*boundary, "thetaf_rad")};

  Section* limits = parser.unique_section("limits");
  if (limits == nullptr) throw ConfigError("missing [limits] section");
  cfg.scene.limits = {get_double(*limits, "v_min_mps"), get_double(*limits, "v_max_mps"),
                      get_double(*limits, "omega_min_radps"),
                      get_double(*limits, "omega_max_radps")};

  for (Section* s : parser.sections("obstacle")) {
    cfg.scene.obstacles.push_back({get_double(*s, "x_e_m"), get_double(*s, "y_e_m"),
                                   get_double(*s, "a_e_m"), get_double(*s, "b_e_m"),
                                   get_double(*s, "theta_e_rad")});
  }

  if (Section* s = parser.unique_section("time_scaling")) {
    ocp::TimeScalingConfig ts;
    ts.N = get_int(*s, "n_steps");
    ts.t_min = get_double_or(*s, "t_min_seconds", 0.0);
    ts.t_init = get_double_or(*s, "t_init_seconds", 0.0);
    cfg.time_scaling = ts;
  }
  if (Section* s = parser.unique_section("exp_weight")) {
    ocp::ExpWeightConfig ew;
    ew.N = get_int(*s, "n_steps");
    ew.gamma = get_double(*s, "gamma");
    ew.t_s = get_double(*s, "t_s_seconds");
    cfg.exp_weight = ew;
  }
  if (Section* s = parser.unique_section("two_stage")) {
    ocp::TwoStageConfig st;
    st.N1 = get_int(*s, "n1_steps");
    st.N2 = get_int(*s, "n2_steps");
    st.gamma = get_double(*s, "gamma");
    st.t_s = get_double(*s, "t_s_seconds");
    st.w1 = get_double(*s, "w1");
    st.w2 = get_double(*s, "w2");
    st.t2_init = get_double_or(*s, "t2_init_seconds", 0.0);
    cfg.two_stage = st;
  }
  if (Section* s = parser.unique_section("mpc")) {
    MpcSection m;
    m.w1_initial = get_double(*s, "w1_initial");
    m.w2_initial = get_double(*s, "w2_initial");
    m.w1_end_phase = get_double(*s, "w1_end_phase");
    m.w2_end_phase = get_double(*s, "w2_end_phase");
    m.convergence_tol = get_double_or(*s, "convergence_tol", 1e-6);
    m.max_replannings = get_int_or(*s, "max_replannings", 500);
    m.snapshots = get_int_list(*s, "snapshots");
    cfg.mpc = m;
  }
  if (Section* s = parser.unique_section("solver")) {
    cfg.solver.kkt_tolerance = get_double_or(*s, "kkt_tolerance", cfg.solver.kkt_tolerance);
    cfg.solver.constraint_tolerance =
        get_double_or(*s, "constraint_tolerance", cfg.solver.constraint_tolerance);
    cfg.solver.max_outer_iterations =
        get_int_or(*s, "max_outer_iterations", cfg.solver.max_outer_iterations);
    cfg.solver.max_inner_iterations =
        get_int_or(*s, "max_inner_iterations", cfg.solver.max_inner_iterations);
    cfg.solver.initial_penalty =
        get_double_or(*s, "initial_penalty", cfg.solver.initial_penalty);
    cfg.solver.penalty_growth =
        get_double_or(*s, "penalty_growth", cfg.solver.penalty_growth);
    cfg.solver.multiplier_bound =
        get_double_or(*s, "multiplier_bound", cfg.solver.multiplier_bound);
  }
  if (Section* s = parser.unique_section("compare")) {
    cfg.compare_n_hi = get_int_or(*s, "n_hi", cfg.compare_n_hi);
  }
  if (Section* s = parser.unique_section("output")) {
    if (s->values.count("dir")) cfg.output_dir = get_string(*s, "dir");
  }
  if (Section* s = parser.unique_section("random")) {
    if (s->values.count("seed")) cfg.seed = static_cast<long>(get_double(*s, "seed"));
  }
  parser.finish();

  // Invariant checks up front so command handlers can assume a sane scenario.
  try {
    cfg.boundary.validate();
    cfg.scene.validate();
    if (cfg.time_scaling) cfg.time_scaling->validate();
    if (cfg.exp_weight) cfg.exp_weight->validate();
    if (cfg.two_stage) cfg.two_stage->validate();
    cfg.solver.validate();
    if (cfg.mpc) cfg.mpc_config().validate();
  } catch (const std::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (cfg.compare_n_hi < 1) throw ConfigError("compare n_hi must be >= 1");
  return cfg;
}

}  // namespace topt::cli
