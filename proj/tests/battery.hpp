// Shared property batteries used by both the unit tests and the acceptance
// suite: AD-vs-finite-difference sweeps over the transcription callbacks and
// the random convex-QP comparison against the active-set oracle.
#pragma once

#include <random>

#include "oracles.hpp"
#include "topt/nlp.hpp"
#include "topt/ocp.hpp"

namespace battery {

using Eigen::VectorXd;

// Worst relative mismatch between dual-number derivatives and central
// finite differences over a problem's objective and constraint stacks.
inline double derivative_mismatch(const topt::nlp::NlpProblem& p, const VectorXd& x) {
  double worst = 0.0;
  const auto rel = [](double ad, double fd) {
    return std::abs(ad - fd) / std::max(1.0, std::abs(ad));
  };
  const VectorXd ad_grad = p.objective_gradient(x);
  const VectorXd fd_grad = oracles::central_diff_gradient(
      [&p](const VectorXd& v) { return p.objective(v); }, x);
  for (int i = 0; i < x.size(); ++i) worst = std::max(worst, rel(ad_grad[i], fd_grad[i]));
  if (p.num_eq() > 0) {
    const Eigen::MatrixXd ad = p.eq_jacobian(x);
    const Eigen::MatrixXd fd = oracles::central_diff_jacobian(
        [&p](const VectorXd& v) { return p.eval_eq(v); }, x);
    for (int r = 0; r < ad.rows(); ++r) {
      for (int c = 0; c < ad.cols(); ++c) worst = std::max(worst, rel(ad(r, c), fd(r, c)));
    }
  }
  if (p.num_ineq() > 0) {
    const Eigen::MatrixXd ad = p.ineq_jacobian(x);
    const Eigen::MatrixXd fd = oracles::central_diff_jacobian(
        [&p](const VectorXd& v) { return p.eval_ineq(v); }, x);
    for (int r = 0; r < ad.rows(); ++r) {
      for (int c = 0; c < ad.cols(); ++c) worst = std::max(worst, rel(ad(r, c), fd(r, c)));
    }
  }
  return worst;
}

inline VectorXd jitter(const VectorXd& x, unsigned seed, double amplitude = 0.2) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  VectorXd out = x;
  for (int i = 0; i < out.size(); ++i) out[i] += dist(rng);
  return out;
}

// Every transcription the toolkit builds, checked at the nominal guess and
// at jittered points. Returns the worst relative derivative mismatch.
inline double run_derivative_battery(const topt::ocp::BoundarySpec& b,
                                     const topt::scene::Scene& scene) {
  double worst = 0.0;
  unsigned seed = 1;
  const auto sweep = [&](const topt::nlp::NlpProblem& p, const VectorXd& guess) {
    worst = std::max(worst, derivative_mismatch(p, guess));
    worst = std::max(worst, derivative_mismatch(p, jitter(guess, seed++)));
    worst = std::max(worst, derivative_mismatch(p, jitter(guess, seed++)));
  };

  topt::ocp::TimeScalingConfig ts;
  ts.N = 12;
  sweep(topt::ocp::build_time_scaling(ts, b, scene),
        topt::ocp::initial_guess(ts, b, scene.limits));

  topt::ocp::ExpWeightConfig ew;
  ew.N = 16;
  sweep(topt::ocp::build_exp_weight(ew, b, scene),
        topt::ocp::initial_guess(ew, b, scene.limits));

  topt::ocp::TwoStageConfig st;
  st.N1 = 8;
  st.N2 = 7;
  st.w1 = 0.7;
  st.w2 = 2.0;
  sweep(topt::ocp::build_two_stage(st, b, scene),
        topt::ocp::initial_guess(st, b, scene.limits));

  sweep(topt::ocp::build_fixed_horizon_feasibility(10, 0.02, b, scene),
        topt::ocp::initial_guess_fixed_horizon(10, b, scene.limits));
  return worst;
}

struct QpBatteryResult {
  int failures = 0;            // non-converged solves
  double worst_gap = 0.0;      // |objective - oracle objective|
};

// Twenty random strictly convex QPs with equality, inequality and box rows,
// solved by the augmented-Lagrangian path and by exhaustive active-set
// enumeration.
inline QpBatteryResult run_qp_battery() {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> dim_dist(2, 30);
  QpBatteryResult result;

  for (int trial = 0; trial < 20; ++trial) {
    const int n = dim_dist(rng);
    const int me = std::min(n - 1, static_cast<int>(rng() % 3));
    const int mi = 1 + static_cast<int>(rng() % 3);
    const int nb = std::min(n, 2 + static_cast<int>(rng() % 3));

    Eigen::MatrixXd root(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) root(r, c) = unit(rng);
    }
    oracles::Qp qp;
    qp.H = root.transpose() * root + 0.5 * n * Eigen::MatrixXd::Identity(n, n);
    qp.c.resize(n);
    for (int i = 0; i < n; ++i) qp.c[i] = unit(rng);

    VectorXd feasible(n);
    for (int i = 0; i < n; ++i) feasible[i] = unit(rng);
    qp.A.resize(me, n);
    for (int r = 0; r < me; ++r) {
      for (int c = 0; c < n; ++c) qp.A(r, c) = unit(rng);
    }
    qp.b = qp.A * feasible;

    const int rows = mi + 2 * nb;
    qp.C.setZero(rows, n);
    qp.d.resize(rows);
    for (int r = 0; r < mi; ++r) {
      for (int c = 0; c < n; ++c) qp.C(r, c) = unit(rng);
      qp.d[r] = qp.C.row(r) * feasible + 0.3 * std::abs(unit(rng));
    }
    for (int k = 0; k < nb; ++k) {
      const double lo = feasible[k] - 0.2 - std::abs(unit(rng));
      const double hi = feasible[k] + 0.2 + std::abs(unit(rng));
      qp.C(mi + 2 * k, k) = 1.0;
      qp.d[mi + 2 * k] = hi;
      qp.C(mi + 2 * k + 1, k) = -1.0;
      qp.d[mi + 2 * k + 1] = -lo;
    }

    const auto reference = oracles::active_set_enumeration(qp);
    if (!reference.found) {
      ++result.failures;
      continue;
    }

    topt::nlp::NlpProblem p(n);
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    p.add_objective_term(all, [H = qp.H, c = qp.c, n](auto x) {
      using S = typename std::remove_cvref_t<decltype(x)>::value_type;
      S acc = 0.0;
      for (int r = 0; r < n; ++r) {
        S row = 0.0;
        for (int col = 0; col < n; ++col) row += H(r, col) * x[col];
        acc += x[r] * row * 0.5 + c[r] * x[r];
      }
      return acc;
    });
    if (me > 0) {
      p.add_eq_block(all, me, [A = qp.A, b = qp.b, me, n](auto x, auto out) {
        using S = typename std::remove_cvref_t<decltype(x)>::value_type;
        for (int r = 0; r < me; ++r) {
          S acc = -b[r];
          for (int c = 0; c < n; ++c) acc += A(r, c) * x[c];
          out[r] = acc;
        }
      });
    }
    p.add_ineq_block(all, rows, [C = qp.C, d = qp.d, rows, n](auto x, auto out) {
      using S = typename std::remove_cvref_t<decltype(x)>::value_type;
      for (int r = 0; r < rows; ++r) {
        S acc = -d[r];
        for (int c = 0; c < n; ++c) acc += C(r, c) * x[c];
        out[r] = acc;
      }
    });

    const auto solved = topt::nlp::solve(p, VectorXd::Zero(n));
    if (solved.report.status != topt::nlp::SolveStatus::converged) {
      ++result.failures;
      continue;
    }
    result.worst_gap = std::max(result.worst_gap,
                                std::abs(solved.report.objective - reference.objective));
  }
  return result;
}

}  // namespace battery
