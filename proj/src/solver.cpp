#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

#include "topt/nlp.hpp"

namespace topt::nlp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPenaltyCap = 1e12;
constexpr double kArmijoC = 1e-4;
constexpr int kLbfgsMemory = 10;

// Value and gradient of the PHR augmented Lagrangian
//   L(x) = f(x) + sum_i [lam_i g_i + rho/2 g_i^2]
//        + 1/(2 rho) sum_j [max(0, mu_j + rho h_j)^2 - mu_j^2]
// evaluated block by block; the gradient pass seeds each block's local
// variables once, so the cost tracks the structural nonzeros.
class AugLagrangian {
 public:
  AugLagrangian(const NlpProblem& p, const VectorXd& lam, const VectorXd& mu, double rho)
      : p_(p), lam_(lam), mu_(mu), rho_(rho) {}

  // Value only (line-search path). Also captures the raw constraint values.
  double value(const VectorXd& x) {
    double total = 0.0;
    for (const auto& term : p_.objective_terms()) {
      gather(x, term.vars);
      total += term.fn(CSpan<double>(local_d_));
    }
    objective_ = total;
    eq_ = p_.num_eq() > 0 ? p_.eval_eq(x) : VectorXd();
    ineq_ = p_.num_ineq() > 0 ? p_.eval_ineq(x) : VectorXd();
    for (int i = 0; i < eq_.size(); ++i) {
      total += lam_[i] * eq_[i] + 0.5 * rho_ * eq_[i] * eq_[i];
    }
    for (int j = 0; j < ineq_.size(); ++j) {
      const double t = std::max(0.0, mu_[j] + rho_ * ineq_[j]);
      total += (t * t - mu_[j] * mu_[j]) / (2.0 * rho_);
    }
    return total;
  }

  // Value plus gradient. The value parts are recomputed per block before the
  // seeded passes because the constraint weights depend on them.
  double value_and_gradient(const VectorXd& x, VectorXd& grad) {
    grad.setZero(p_.num_vars());
    double total = 0.0;
    for (const auto& term : p_.objective_terms()) {
      total += term_gradient(x, term, grad);
    }
    objective_ = total;
    eq_.resize(p_.num_eq());
    ineq_.resize(p_.num_ineq());
    active_set_.assign(p_.num_ineq(), 0);
    for (const auto& block : p_.eq_blocks()) {
      block_contribution(x, block, grad, /*is_eq=*/true, total);
    }
    for (const auto& block : p_.ineq_blocks()) {
      block_contribution(x, block, grad, /*is_eq=*/false, total);
    }
    return total;
  }

  double objective() const { return objective_; }
  const VectorXd& eq_values() const { return eq_; }
  const VectorXd& ineq_values() const { return ineq_; }
  // Which inequality penalty terms were switched on at the last
  // value_and_gradient point; curvature pairs straddling a switch are
  // worthless to a quasi-Newton model.
  const std::vector<char>& active_set() const { return active_set_; }

  // Diagonal of the Gauss-Newton curvature of the penalty terms,
  // rho * sum_r J(r,i)^2 over active rows; built from first derivatives only
  // and used to seed the limited-memory model.
  VectorXd curvature_diagonal(const VectorXd& x) {
    VectorXd diag = VectorXd::Zero(p_.num_vars());
    for (const auto& block : p_.eq_blocks()) {
      accumulate_curvature(x, block, /*is_eq=*/true, diag);
    }
    for (const auto& block : p_.ineq_blocks()) {
      accumulate_curvature(x, block, /*is_eq=*/false, diag);
    }
    return diag;
  }

 private:
  void gather(const VectorXd& x, const std::vector<int>& vars) {
    local_d_.resize(vars.size());
    for (std::size_t j = 0; j < vars.size(); ++j) local_d_[j] = x[vars[j]];
  }

  double term_gradient(const VectorXd& x, const NlpProblem::ObjectiveTerm& term,
                       VectorXd& grad) {
    const int k = static_cast<int>(term.vars.size());
    if (k == 0) return term.fn(CSpan<double>{});
    local_pack_.resize(k);
    double value = 0.0;
    for (int base = 0; base < k; base += kDualPackWidth) {
      const int width = std::min(kDualPackWidth, k - base);
      for (int j = 0; j < k; ++j) local_pack_[j] = DualPack(x[term.vars[j]]);
      for (int j = 0; j < width; ++j) local_pack_[base + j].dot[j] = 1.0;
      const DualPack out = term.fn(CSpan<DualPack>(local_pack_));
      value = out.val;
      for (int j = 0; j < width; ++j) grad[term.vars[base + j]] += out.dot[j];
    }
    return value;
  }

  // One packed pass per <=12-variable block yields values and the local
  // Jacobian simultaneously; wider blocks seed in chunks.
  void block_contribution(const VectorXd& x, const NlpProblem::ConstraintBlock& block,
                          VectorXd& grad, bool is_eq, double& total) {
    const int k = static_cast<int>(block.vars.size());
    local_pack_.resize(k);
    vals_pack_.resize(block.dim);
    weights_.resize(block.dim);
    for (int base = 0; base < k; base += kDualPackWidth) {
      const int width = std::min(kDualPackWidth, k - base);
      for (int j = 0; j < k; ++j) local_pack_[j] = DualPack(x[block.vars[j]]);
      for (int j = 0; j < width; ++j) local_pack_[base + j].dot[j] = 1.0;
      block.fn(CSpan<DualPack>(local_pack_), MSpan<DualPack>(vals_pack_));
      if (base == 0) {
        for (int r = 0; r < block.dim; ++r) {
          const double c = vals_pack_[r].val;
          if (is_eq) {
            eq_[block.row + r] = c;
            const double lam = lam_[block.row + r];
            total += lam * c + 0.5 * rho_ * c * c;
            weights_[r] = lam + rho_ * c;
          } else {
            ineq_[block.row + r] = c;
            const double mu = mu_[block.row + r];
            const double t = std::max(0.0, mu + rho_ * c);
            total += (t * t - mu * mu) / (2.0 * rho_);
            weights_[r] = t;
            if (t > 0.0) active_set_[block.row + r] = 1;
          }
        }
      }
      for (int j = 0; j < width; ++j) {
        double acc = 0.0;
        for (int r = 0; r < block.dim; ++r) {
          acc += weights_[r] * vals_pack_[r].dot[j];
        }
        grad[block.vars[base + j]] += acc;
      }
    }
  }

  void accumulate_curvature(const VectorXd& x, const NlpProblem::ConstraintBlock& block,
                            bool is_eq, VectorXd& diag) {
    const int k = static_cast<int>(block.vars.size());
    local_pack_.resize(k);
    vals_pack_.resize(block.dim);
    active_.assign(block.dim, true);
    for (int base = 0; base < k; base += kDualPackWidth) {
      const int width = std::min(kDualPackWidth, k - base);
      for (int j = 0; j < k; ++j) local_pack_[j] = DualPack(x[block.vars[j]]);
      for (int j = 0; j < width; ++j) local_pack_[base + j].dot[j] = 1.0;
      block.fn(CSpan<DualPack>(local_pack_), MSpan<DualPack>(vals_pack_));
      if (base == 0 && !is_eq) {
        for (int r = 0; r < block.dim; ++r) {
          active_[r] = mu_[block.row + r] + rho_ * vals_pack_[r].val > 0.0;
        }
      }
      for (int j = 0; j < width; ++j) {
        double acc = 0.0;
        for (int r = 0; r < block.dim; ++r) {
          if (active_[r]) acc += vals_pack_[r].dot[j] * vals_pack_[r].dot[j];
        }
        diag[block.vars[base + j]] += rho_ * acc;
      }
    }
  }

  const NlpProblem& p_;
  const VectorXd& lam_;
  const VectorXd& mu_;
  double rho_;
  double objective_ = 0.0;
  VectorXd eq_;
  VectorXd ineq_;
  std::vector<double> local_d_;
  std::vector<DualPack> local_pack_;
  std::vector<double> vals_d_;
  std::vector<DualPack> vals_pack_;
  std::vector<double> weights_;
  std::vector<bool> active_;
  std::vector<char> active_set_;
};

struct InnerOutcome {
  int iterations = 0;
  double projected_residual = kInf;
  bool nonfinite = false;
  bool plateaued = false;
};

// Iterations the projected gradient may go without a 30% improvement before
// the subproblem is declared plateaued (kink chatter); the multiplier update
// then moves the landscape instead.
constexpr int kPlateauWindow = 300;

// Projected L-BFGS over the box, Armijo backtracking along the projection
// arc. Terminates on the projected-gradient tolerance, the iteration budget
// or a stalled line search.
InnerOutcome minimize_box(AugLagrangian& lag, VectorXd& x, const VectorXd& lower,
                          const VectorXd& upper, double tol, int max_iters,
                          bool allow_plateau_exit) {
  InnerOutcome out;
  const bool trace_inner = std::getenv("TOPT_INNER_TRACE") != nullptr;
  const auto project = [&](const VectorXd& v) -> VectorXd {
    return v.cwiseMax(lower).cwiseMin(upper);
  };

  VectorXd grad(x.size());
  double f = lag.value_and_gradient(x, grad);
  if (!std::isfinite(f) || !grad.allFinite()) {
    out.nonfinite = true;
    return out;
  }

  std::deque<std::pair<VectorXd, VectorXd>> memory;  // (s, y)
  VectorXd d, xt, grad_new, reduced;
  std::vector<double> alpha_buf;
  constexpr double kActiveEps = 1e-12;
  constexpr int kPrecondRefresh = 25;

  VectorXd curvature = lag.curvature_diagonal(x);
  double plateau_best = kInf;
  int plateau_mark = 0;

  for (int iter = 0; iter < max_iters; ++iter) {
    if (iter > 0 && iter % kPrecondRefresh == 0) {
      curvature = lag.curvature_diagonal(x);
    }
    const VectorXd pg = x - project(x - grad);
    out.projected_residual = pg.size() > 0 ? pg.cwiseAbs().maxCoeff() : 0.0;
    if (out.projected_residual <= tol) {
      out.iterations = iter;
      return out;
    }
    if (out.projected_residual < 0.7 * plateau_best) {
      plateau_best = out.projected_residual;
      plateau_mark = iter;
    } else if (allow_plateau_exit && iter - plateau_mark >= kPlateauWindow) {
      out.iterations = iter;
      out.plateaued = true;
      return out;
    }

    // Quasi-Newton model on the free variables only: bound-blocked gradient
    // components are masked out so the memory is not polluted by projection
    // kinks.
    reduced = grad;
    for (int i = 0; i < x.size(); ++i) {
      const bool blocked_low = x[i] - lower[i] <= kActiveEps && grad[i] > 0.0;
      const bool blocked_high = upper[i] - x[i] <= kActiveEps && grad[i] < 0.0;
      if (blocked_low || blocked_high) reduced[i] = 0.0;
    }

    // Two-loop recursion seeded with the penalty curvature diagonal; the
    // scalar from the latest pair supplies the residual (objective) scale.
    d = -reduced;
    {
      alpha_buf.assign(memory.size(), 0.0);
      for (int i = static_cast<int>(memory.size()) - 1; i >= 0; --i) {
        const auto& [s, y] = memory[i];
        const double rho_i = 1.0 / y.dot(s);
        alpha_buf[i] = rho_i * s.dot(d);
        d -= alpha_buf[i] * y;
      }
      double sigma = 1.0;
      if (!memory.empty()) {
        const auto& [s_last, y_last] = memory.back();
        sigma = std::max(1e-12, y_last.dot(y_last) / s_last.dot(y_last));
      }
      for (int i = 0; i < x.size(); ++i) d[i] /= curvature[i] + sigma;
      for (std::size_t i = 0; i < memory.size(); ++i) {
        const auto& [s, y] = memory[i];
        const double rho_i = 1.0 / y.dot(s);
        const double beta = rho_i * y.dot(d);
        d += (alpha_buf[i] - beta) * s;
      }
      for (int i = 0; i < x.size(); ++i) {
        if (reduced[i] == 0.0 && grad[i] != 0.0) d[i] = 0.0;
      }
    }
    if (d.dot(reduced) >= -1e-14 * d.norm() * reduced.norm()) {
      d = -reduced;  // not a descent direction; fall back
      memory.clear();
    }

    // Backtracking line search on the projection arc.
    bool accepted = false;
    bool retried_steepest = false;
    double alpha = 1.0;
    double ft = 0.0;
    for (int ls = 0; ls < 200; ++ls) {
      xt = project(x + alpha * d);
      const double pred = grad.dot(xt - x);
      if (pred >= 0.0 || (xt - x).cwiseAbs().maxCoeff() == 0.0) {
        if (!retried_steepest && d != -reduced) {
          d = -reduced;
          memory.clear();
          alpha = 1.0;
          retried_steepest = true;
          continue;
        }
        break;
      }
      ft = lag.value(xt);
      if (std::isfinite(ft) && ft <= f + kArmijoC * pred) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
      if (alpha < 1e-20) break;
    }
    if (!accepted) {
      out.iterations = iter;
      return out;  // stalled; caller proceeds with multiplier/penalty update
    }

    grad_new.resize(x.size());
    const double f_new = lag.value_and_gradient(xt, grad_new);
    if (!std::isfinite(f_new) || !grad_new.allFinite()) {
      out.nonfinite = true;
      out.iterations = iter + 1;
      return out;
    }
    const VectorXd s = xt - x;
    const VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      memory.emplace_back(s, y);
      if (memory.size() > kLbfgsMemory) memory.pop_front();
    }
    x = xt;
    f = f_new;
    grad.swap(grad_new);
    out.iterations = iter + 1;
    if (trace_inner && iter % 500 == 0) {
      std::fprintf(stderr, "  [inner] iter=%d f=%.10e pg=%.3e alpha=%.2e mem=%zu\n", iter,
                   f, out.projected_residual, alpha, memory.size());
    }
  }
  const VectorXd pg = x - project(x - grad);
  out.projected_residual = pg.size() > 0 ? pg.cwiseAbs().maxCoeff() : 0.0;
  return out;
}

double constraint_violation(const VectorXd& eq, const VectorXd& ineq) {
  double v = 0.0;
  if (eq.size() > 0) v = eq.cwiseAbs().maxCoeff();
  if (ineq.size() > 0) v = std::max(v, ineq.cwiseMax(0.0).maxCoeff());
  return v;
}

}  // namespace

SolveResult solve(const NlpProblem& problem, const VectorXd& x0,
                  const SolverSettings& settings, WarmStart* warm) {
  settings.validate();
  if (x0.size() != problem.num_vars()) {
    throw std::invalid_argument("solve: x0 dimension mismatch");
  }
  if (!x0.allFinite()) {
    throw std::invalid_argument("solve: x0 must be finite");
  }
  const auto t_start = std::chrono::steady_clock::now();

  VectorXd x = problem.clip_to_bounds(x0);
  VectorXd lam = VectorXd::Zero(problem.num_eq());
  VectorXd mu = VectorXd::Zero(problem.num_ineq());
  double rho = settings.initial_penalty;
  if (warm != nullptr && warm->eq_multipliers.size() == problem.num_eq() &&
      warm->ineq_multipliers.size() == problem.num_ineq() && warm->penalty > 0.0) {
    lam = warm->eq_multipliers;
    mu = warm->ineq_multipliers.cwiseMax(0.0);
    rho = std::min(std::max(warm->penalty, settings.initial_penalty), 1e5);
  }

  SolveResult result;
  result.report.status = SolveStatus::max_iterations;

  double viol = kInf;
  {
    const VectorXd eq0 = problem.num_eq() > 0 ? problem.eval_eq(x) : VectorXd();
    const VectorXd in0 = problem.num_ineq() > 0 ? problem.eval_ineq(x) : VectorXd();
    viol = constraint_violation(eq0, in0);
  }

  // Best iterate: feasible-and-lowest-objective wins, otherwise lowest
  // violation.
  VectorXd best_x = x;
  double best_viol = viol;
  double best_obj = problem.objective(x);
  const auto consider_best = [&](const VectorXd& cand, double cand_viol, double cand_obj) {
    const bool cand_feas = cand_viol <= settings.constraint_tolerance;
    const bool best_feas = best_viol <= settings.constraint_tolerance;
    const bool better = (cand_feas && !best_feas) ||
                        (cand_feas && best_feas && cand_obj < best_obj) ||
                        (!cand_feas && !best_feas && cand_viol < best_viol);
    if (better) {
      best_x = cand;
      best_viol = cand_viol;
      best_obj = cand_obj;
    }
  };

  int stagnant_outers = 0;
  int total_inner = 0;
  int outer = 0;
  bool converged = false;
  bool nonfinite = false;
  double stationarity_scaled = kInf;

  for (outer = 0; outer < settings.max_outer_iterations; ++outer) {
    // Loose while infeasible, tightening with the violation level. The
    // schedule works in absolute gradient units; only the convergence test
    // is scaled by the objective-gradient magnitude.
    const double inner_tol = std::max(
        settings.kkt_tolerance, std::min(1e-2, 0.1 * std::min(viol, 1.0)));

    AugLagrangian lag(problem, lam, mu, rho);
    const InnerOutcome inner =
        minimize_box(lag, x, problem.lower_bounds(), problem.upper_bounds(), inner_tol,
                     settings.max_inner_iterations,
                     /*allow_plateau_exit=*/viol > settings.constraint_tolerance);
    total_inner += inner.iterations;
    if (inner.nonfinite) {
      nonfinite = true;
      ++outer;
      break;
    }

    const VectorXd& eq = lag.eq_values();
    const VectorXd& ineq = lag.ineq_values();
    const double new_viol = constraint_violation(eq, ineq);
    consider_best(x, new_viol, lag.objective());

    // PHR multiplier update; the post-update Lagrangian gradient equals the
    // augmented gradient at x, so the inner residual doubles as the KKT
    // stationarity measure.
    if (lam.size() > 0) {
      lam += rho * eq;
      lam = lam.cwiseMax(-settings.multiplier_bound).cwiseMin(settings.multiplier_bound);
    }
    if (mu.size() > 0) {
      mu = (mu + rho * ineq).cwiseMax(0.0).cwiseMin(settings.multiplier_bound);
    }

    const double scale_now =
        std::max(1.0, problem.objective_gradient(x).cwiseAbs().maxCoeff());
    stationarity_scaled = inner.projected_residual / scale_now;
    if (std::getenv("TOPT_SOLVER_TRACE") != nullptr) {
      VectorXd grad_la(problem.num_vars());
      AugLagrangian lag_dbg(problem, lam, mu, rho);
      lag_dbg.value_and_gradient(x, grad_la);
      const VectorXd pg = x - problem.clip_to_bounds(x - grad_la);
      int arg = 0;
      pg.cwiseAbs().maxCoeff(&arg);
      std::fprintf(stderr,
                   "[solve] outer=%d rho=%.1e viol=%.3e stat=%.3e inner=%d obj=%.8f "
                   "argmax_pg=%d\n",
                   outer, rho, new_viol, stationarity_scaled, inner.iterations,
                   lag.objective(), arg);
    }
    if (new_viol <= settings.constraint_tolerance &&
        stationarity_scaled <= settings.kkt_tolerance) {
      converged = true;
      ++outer;
      break;
    }

    // Penalty grows whenever the violation fails to shrink by a factor 4
    // while still above tolerance. Growth is charged only after the inner
    // solve actually met its tolerance; otherwise the lack of progress says
    // nothing about the penalty being too weak.
    const bool inner_done = inner.projected_residual <= inner_tol;
    if (inner_done && new_viol > settings.constraint_tolerance &&
        new_viol > 0.25 * viol) {
      rho = std::min(rho * settings.penalty_growth, kPenaltyCap);
    }

    // Infeasibility cutoff: penalty saturated, subproblems solved, and the
    // violation parked far above tolerance.
    if (inner_done && rho >= 1e8 && new_viol > 0.5 * viol &&
        new_viol > 1000.0 * settings.constraint_tolerance) {
      ++stagnant_outers;
      if (stagnant_outers >= 4) {
        viol = new_viol;
        ++outer;
        break;
      }
    } else {
      stagnant_outers = 0;
    }
    viol = new_viol;
  }

  if (converged) {
    result.x = x;
    result.report.status = SolveStatus::converged;
  } else {
    result.x = best_x;
    result.report.status =
        nonfinite ? SolveStatus::numerical_failure : SolveStatus::max_iterations;
  }

  const VectorXd eq_f = problem.num_eq() > 0 ? problem.eval_eq(result.x) : VectorXd();
  const VectorXd in_f = problem.num_ineq() > 0 ? problem.eval_ineq(result.x) : VectorXd();
  result.report.outer_iterations = outer;
  result.report.inner_iterations = total_inner;
  result.report.objective = problem.objective(result.x);
  result.report.max_eq_violation = eq_f.size() > 0 ? eq_f.cwiseAbs().maxCoeff() : 0.0;
  result.report.max_ineq_violation = in_f.size() > 0 ? in_f.cwiseMax(0.0).maxCoeff() : 0.0;
  result.report.stationarity = stationarity_scaled;
  result.report.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  if (warm != nullptr) {
    warm->eq_multipliers = lam;
    warm->ineq_multipliers = mu;
    warm->penalty = rho;
  }
  return result;
}

}  // namespace topt::nlp
