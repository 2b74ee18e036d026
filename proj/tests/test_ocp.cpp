#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "topt/ocp.hpp"

using topt::model::Control;
using topt::model::State;
using topt::nlp::CSpan;
using topt::nlp::Dual;
using topt::nlp::MSpan;
using topt::nlp::NlpProblem;
using topt::nlp::SolveStatus;
using topt::nlp::VectorXd;
using topt::ocp::BoundarySpec;
using topt::ocp::ExpWeightConfig;
using topt::ocp::TimeScalingConfig;
using topt::ocp::TwoStageConfig;

namespace {

constexpr double kPi = 3.14159265358979323846;

topt::scene::Scene paper_scene() {
  topt::scene::Scene s;
  s.limits = {0.0, 0.5, -kPi / 3, kPi / 3};
  s.obstacles.push_back({2.5, 1.0, 2.0, 1.0, -kPi / 6});
  return s;
}

topt::scene::Scene open_scene() {
  topt::scene::Scene s;
  s.limits = {0.0, 0.5, -kPi / 3, kPi / 3};
  return s;
}

const BoundarySpec kPaperBoundary{{0.70713, 1.83274, 1.38778}, {4.0, 3.5, 0.0}};
const BoundarySpec kCorridor{{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};

// Dense finite-difference check of a problem's callbacks at a point.
void check_derivatives(const NlpProblem& p, const VectorXd& x) {
  const auto obj = [&p](const VectorXd& v) { return p.objective(v); };
  const VectorXd fd_grad = oracles::central_diff_gradient(obj, x);
  const VectorXd ad_grad = p.objective_gradient(x);
  for (int i = 0; i < x.size(); ++i) {
    CHECK(std::abs(ad_grad[i] - fd_grad[i]) <=
          1e-6 * std::max(1.0, std::abs(ad_grad[i])));
  }
  if (p.num_eq() > 0) {
    const auto eq = [&p](const VectorXd& v) { return p.eval_eq(v); };
    const Eigen::MatrixXd fd = oracles::central_diff_jacobian(eq, x);
    const Eigen::MatrixXd ad = p.eq_jacobian(x);
    CHECK(((ad - fd).cwiseAbs().maxCoeff()) <=
          1e-6 * std::max(1.0, ad.cwiseAbs().maxCoeff()));
  }
  if (p.num_ineq() > 0) {
    const auto ineq = [&p](const VectorXd& v) { return p.eval_ineq(v); };
    const Eigen::MatrixXd fd = oracles::central_diff_jacobian(ineq, x);
    const Eigen::MatrixXd ad = p.ineq_jacobian(x);
    CHECK(((ad - fd).cwiseAbs().maxCoeff()) <=
          1e-6 * std::max(1.0, ad.cwiseAbs().maxCoeff()));
  }
}

VectorXd perturbed(const VectorXd& x, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-0.2, 0.2);
  VectorXd out = x;
  for (int i = 0; i < out.size(); ++i) out[i] += dist(rng);
  return out;
}

}  // namespace

TEST_CASE("initial guess: degenerate clamp, paper arithmetic, bound feasibility") {
  const topt::scene::Scene scene = paper_scene();

  TimeScalingConfig degenerate_cfg;
  degenerate_cfg.N = 10;
  const BoundarySpec degenerate{{1, 1, 1}, {1, 1, 1}};
  const VectorXd x_deg = topt::ocp::initial_guess(degenerate_cfg, degenerate, scene.limits);
  CHECK(x_deg[topt::ocp::TimeScalingLayout(10).t_var()] == doctest::Approx(0.1));

  TimeScalingConfig paper_cfg;
  paper_cfg.N = 50;
  const VectorXd x = topt::ocp::initial_guess(paper_cfg, kPaperBoundary, scene.limits);
  CHECK(x[0] == doctest::Approx(11.0727).epsilon(1e-3));

  const auto p = topt::ocp::build_time_scaling(paper_cfg, kPaperBoundary, scene);
  const VectorXd clipped = p.clip_to_bounds(x);
  CHECK((clipped - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encode/extract round trips for all three layouts") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const auto random_states = [&](int count) {
    std::vector<State> out;
    for (int i = 0; i < count; ++i) out.push_back({dist(rng), dist(rng), dist(rng)});
    return out;
  };
  const auto random_controls = [&](int count) {
    std::vector<Control> out;
    for (int i = 0; i < count; ++i) out.push_back({dist(rng), dist(rng)});
    return out;
  };
  const State goal{0.4, -0.2, 0.1};

  TimeScalingConfig ts;
  ts.N = 7;
  const auto ts_states = random_states(8);
  const auto ts_controls = random_controls(7);
  const VectorXd ts_x = topt::ocp::encode_time_scaling(ts, 3.7, ts_states, ts_controls);
  const auto ts_sol = topt::ocp::extract_solution(ts, ts_x, {});
  CHECK(ts_sol.total_time == 3.7);
  for (int n = 0; n <= 7; ++n) {
    CHECK(ts_sol.trajectory.states[n].x == ts_states[n].x);
    CHECK(ts_sol.trajectory.times[n] == doctest::Approx(n * 3.7 / 7).epsilon(1e-15));
  }
  for (int n = 0; n < 7; ++n) CHECK(ts_sol.trajectory.controls[n].v == ts_controls[n].v);

  ExpWeightConfig ew;
  ew.N = 6;
  const auto ew_states = random_states(7);
  const auto ew_controls = random_controls(6);
  const VectorXd ew_x = topt::ocp::encode_exp_weight(ew, ew_states, ew_controls, goal);
  const auto ew_sol = topt::ocp::extract_solution(ew, ew_x, {}, goal);
  for (int n = 0; n <= 6; ++n) CHECK(ew_sol.trajectory.states[n].y == ew_states[n].y);

  TwoStageConfig st;
  st.N1 = 4;
  st.N2 = 5;
  st.w1 = 1.0;
  const auto s1 = random_states(5);
  const auto u1 = random_controls(4);
  auto s2 = random_states(6);
  s2.front() = s1.back();  // stitched
  const auto u2 = random_controls(5);
  const VectorXd st_x = topt::ocp::encode_two_stage(st, s1, u1, 0.9, s2, u2, goal);
  const auto st_sol = topt::ocp::extract_solution(st, st_x, {}, goal);
  REQUIRE(st_sol.trajectory.states.size() == 10);  // stitch state deduplicated
  CHECK(st_sol.stage2_time == doctest::Approx(0.9));
  CHECK(st_sol.total_time == doctest::Approx(4 * st.t_s + 0.9));
  CHECK(st_sol.trajectory.states[4].x == s1[4].x);
  CHECK(st_sol.trajectory.states[5].x == s2[1].x);
  CHECK(st_sol.trajectory.times[5] == doctest::Approx(4 * st.t_s + 0.9 / 5));
  REQUIRE(st_sol.trajectory.controls.size() == 9);
  CHECK(st_sol.trajectory.controls[4].v == u2[0].v);

  CHECK_THROWS_AS(topt::ocp::extract_solution(ts, ew_x, {}), std::invalid_argument);
}

TEST_CASE("two-stage extraction flags a collapsed stage 2") {
  TwoStageConfig st;
  st.N1 = 3;
  st.N2 = 3;
  const State goal{1, 1, 0};
  const std::vector<State> s1(4, goal);
  const std::vector<Control> u1(3, Control{0, 0});
  const std::vector<State> s2(4, goal);
  const std::vector<Control> u2(3, Control{0, 0});
  const VectorXd x = topt::ocp::encode_two_stage(st, s1, u1, 0.0, s2, u2, goal);
  const auto sol = topt::ocp::extract_solution(st, x, {}, goal);
  CHECK(sol.stage2_degenerate);
  CHECK(sol.total_time == 0.0);
  for (int n = 0; n < 3; ++n) {
    CHECK(sol.trajectory.times[4 + n] == doctest::Approx(3 * st.t_s));
  }
  sol.trajectory.validate(/*allow_equal_times=*/true);
}

TEST_CASE("derivative battery: every builder's callbacks match finite differences") {
  const topt::scene::Scene scene = paper_scene();

  TimeScalingConfig ts;
  ts.N = 9;
  const auto p_ts = topt::ocp::build_time_scaling(ts, kPaperBoundary, scene);
  const VectorXd g_ts = topt::ocp::initial_guess(ts, kPaperBoundary, scene.limits);
  check_derivatives(p_ts, g_ts);
  check_derivatives(p_ts, perturbed(g_ts, 1));

  ExpWeightConfig ew;
  ew.N = 11;
  const auto p_ew = topt::ocp::build_exp_weight(ew, kPaperBoundary, scene);
  const VectorXd g_ew = topt::ocp::initial_guess(ew, kPaperBoundary, scene.limits);
  check_derivatives(p_ew, g_ew);
  check_derivatives(p_ew, perturbed(g_ew, 2));

  TwoStageConfig st;
  st.N1 = 6;
  st.N2 = 5;
  st.w1 = 0.7;
  st.w2 = 2.0;
  const auto p_st = topt::ocp::build_two_stage(st, kPaperBoundary, scene);
  const VectorXd g_st = topt::ocp::initial_guess(st, kPaperBoundary, scene.limits);
  check_derivatives(p_st, g_st);
  check_derivatives(p_st, perturbed(g_st, 3));

  const auto p_fh =
      topt::ocp::build_fixed_horizon_feasibility(8, 0.02, kPaperBoundary, scene);
  const VectorXd g_fh =
      topt::ocp::initial_guess_fixed_horizon(8, kPaperBoundary, scene.limits);
  check_derivatives(p_fh, g_fh);
  check_derivatives(p_fh, perturbed(g_fh, 4));
}

TEST_CASE("time scaling: stationary boundary pair collapses to t_min") {
  TimeScalingConfig cfg;
  cfg.N = 8;
  const BoundarySpec stay{{0.5, -0.3, 0.9}, {0.5, -0.3, 0.9}};
  const auto p = topt::ocp::build_time_scaling(cfg, stay, open_scene());
  const auto x0 = topt::ocp::initial_guess(cfg, stay, open_scene().limits);
  const auto result = topt::nlp::solve(p, x0);
  CHECK(result.report.status == SolveStatus::converged);
  const auto sol = topt::ocp::extract_solution(cfg, result.x, result.report);
  CHECK(std::abs(sol.total_time) <= 1e-6);
}

TEST_CASE("time scaling: straight corridor runs at the speed limit") {
  TimeScalingConfig cfg;
  cfg.N = 20;
  const auto p = topt::ocp::build_time_scaling(cfg, kCorridor, open_scene());
  const auto x0 = topt::ocp::initial_guess(cfg, kCorridor, open_scene().limits);
  const auto result = topt::nlp::solve(p, x0);
  CHECK(result.report.status == SolveStatus::converged);
  const auto sol = topt::ocp::extract_solution(cfg, result.x, result.report);
  CHECK(sol.total_time == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("exp weighting: stationary boundary pair pins every state") {
  ExpWeightConfig cfg;
  cfg.N = 8;
  const BoundarySpec stay{{1.0, 2.0, -0.4}, {1.0, 2.0, -0.4}};
  const auto p = topt::ocp::build_exp_weight(cfg, stay, open_scene());
  const auto x0 = topt::ocp::initial_guess(cfg, stay, open_scene().limits);
  const auto result = topt::nlp::solve(p, x0);
  CHECK(result.report.status == SolveStatus::converged);
  CHECK(result.report.objective <= 1e-8);
  const auto sol = topt::ocp::extract_solution(cfg, result.x, result.report, stay.s_tf);
  for (const State& s : sol.trajectory.states) {
    CHECK(topt::model::max_component_distance(s, stay.s_tf) <= 1e-6);
  }
  CHECK(sol.total_time == 0.0);
}

TEST_CASE("two stage: stationary boundary pair collapses stage 2") {
  TwoStageConfig cfg;
  cfg.N1 = 6;
  cfg.N2 = 6;
  const BoundarySpec stay{{0.2, 0.1, 0.0}, {0.2, 0.1, 0.0}};
  const auto p = topt::ocp::build_two_stage(cfg, stay, open_scene());
  const auto x0 = topt::ocp::initial_guess(cfg, stay, open_scene().limits);
  const auto result = topt::nlp::solve(p, x0);
  CHECK(result.report.status == SolveStatus::converged);
  const auto sol = topt::ocp::extract_solution(cfg, result.x, result.report, stay.s_tf);
  REQUIRE(sol.stage2_time.has_value());
  CHECK(*sol.stage2_time <= 1e-6);
  CHECK(result.report.objective <= 1e-6);
}

TEST_CASE("two stage agrees with time scaling on the corridor") {
  TwoStageConfig st;
  st.N1 = 10;
  st.N2 = 10;
  st.w1 = 0.0;
  st.w2 = 1.0;
  const auto p2 = topt::ocp::build_two_stage(st, kCorridor, open_scene());
  const auto x2 = topt::ocp::initial_guess(st, kCorridor, open_scene().limits);
  const auto r2 = topt::nlp::solve(p2, x2);
  CHECK(r2.report.status == SolveStatus::converged);
  const auto two_stage = topt::ocp::extract_solution(st, r2.x, r2.report, kCorridor.s_tf);

  TimeScalingConfig ts;
  ts.N = 20;
  const auto p1 = topt::ocp::build_time_scaling(ts, kCorridor, open_scene());
  const auto r1 = topt::nlp::solve(p1, topt::ocp::initial_guess(ts, kCorridor,
                                                                open_scene().limits));
  const auto scaling = topt::ocp::extract_solution(ts, r1.x, r1.report);

  CHECK(std::abs(two_stage.total_time - scaling.total_time) <= 2.0 * st.t_s);
}

TEST_CASE("min horizon search: degenerate, corridor, infeasible upper bound") {
  const auto scene = open_scene();

  const BoundarySpec stay{{0.3, 0.3, 0.1}, {0.3, 0.3, 0.1}};
  const auto deg = topt::ocp::min_horizon_search(stay, scene, 0.02, 8);
  CHECK(deg.status == topt::ocp::MinHorizonStatus::found);
  CHECK(deg.n_star == 1);

  const auto corridor = topt::ocp::min_horizon_search(kCorridor, scene, 0.02, 128);
  CHECK(corridor.status == topt::ocp::MinHorizonStatus::found);
  CHECK(corridor.n_star >= 99);
  CHECK(corridor.n_star <= 101);

  // 1 m in at most 10 steps of at most 1 cm each: impossible.
  const auto impossible = topt::ocp::min_horizon_search(kCorridor, scene, 0.02, 10);
  CHECK(impossible.status == topt::ocp::MinHorizonStatus::infeasible_at_upper_bound);
}

TEST_CASE("builders reject invalid configurations") {
  CHECK_THROWS_AS(topt::ocp::build_time_scaling(TimeScalingConfig{0, 0, 0}, kCorridor,
                                                open_scene()),
                  std::invalid_argument);
  ExpWeightConfig bad_gamma;
  bad_gamma.gamma = 1.0;
  CHECK_THROWS_AS(topt::ocp::build_exp_weight(bad_gamma, kCorridor, open_scene()),
                  std::invalid_argument);
  TwoStageConfig zero_weights;
  zero_weights.w1 = 0.0;
  zero_weights.w2 = 0.0;
  CHECK_THROWS_AS(topt::ocp::build_two_stage(zero_weights, kCorridor, open_scene()),
                  std::invalid_argument);
  topt::scene::Scene bad_scene = open_scene();
  bad_scene.obstacles.push_back({0, 0, 0.0, 1.0, 0});
  TimeScalingConfig ok;
  CHECK_THROWS_AS(topt::ocp::build_time_scaling(ok, kCorridor, bad_scene),
                  std::invalid_argument);
}
