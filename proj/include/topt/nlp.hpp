#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "topt/dual.hpp"
#include "topt/dual_pack.hpp"

namespace topt::nlp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

template <class T>
using CSpan = std::span<const T>;
template <class T>
using MSpan = std::span<T>;

// Type-erased scalar function evaluable on doubles and on dual numbers
// (scalar and packed). Construct from any generic callable
// `f(span<const S>) -> S`.
class ScalarFn {
 public:
  template <class F, class = std::enable_if_t<!std::is_same_v<std::decay_t<F>, ScalarFn>>>
  ScalarFn(F f) : value_(f), dual_(f), pack_(std::move(f)) {}  // NOLINT

  double operator()(CSpan<double> x) const { return value_(x); }
  Dual operator()(CSpan<Dual> x) const { return dual_(x); }
  DualPack operator()(CSpan<DualPack> x) const { return pack_(x); }

 private:
  std::function<double(CSpan<double>)> value_;
  std::function<Dual(CSpan<Dual>)> dual_;
  std::function<DualPack(CSpan<DualPack>)> pack_;
};

// Same idea for vector functions writing into a caller-provided output span.
class VectorFn {
 public:
  template <class F, class = std::enable_if_t<!std::is_same_v<std::decay_t<F>, VectorFn>>>
  VectorFn(F f) : value_(f), dual_(f), pack_(std::move(f)) {}  // NOLINT

  void operator()(CSpan<double> x, MSpan<double> out) const { value_(x, out); }
  void operator()(CSpan<Dual> x, MSpan<Dual> out) const { dual_(x, out); }
  void operator()(CSpan<DualPack> x, MSpan<DualPack> out) const { pack_(x, out); }

 private:
  std::function<void(CSpan<double>, MSpan<double>)> value_;
  std::function<void(CSpan<Dual>, MSpan<Dual>)> dual_;
  std::function<void(CSpan<DualPack>, MSpan<DualPack>)> pack_;
};

// Exact gradient of f at x by forward-mode dual propagation, one seeded pass
// per variable. Throws std::domain_error naming the seed index if any pass
// produces a non-finite value.
VectorXd gradient(const std::function<Dual(CSpan<Dual>)>& f, const VectorXd& x);

// Row-per-output Jacobian of g (output dimension m), same seeding scheme.
MatrixXd jacobian(const std::function<void(CSpan<Dual>, MSpan<Dual>)>& g, int m,
                  const VectorXd& x);

// Dense NLP:
//   minimize    f(x) = sum of objective terms
//   subject to  g(x) = 0, h(x) <= 0, lower <= x <= upper.
// Objective and constraints are sums/stacks of small blocks, each touching a
// short list of variables; derivatives are propagated per block, which keeps
// Jacobian work proportional to the number of nonzeros even though storage
// stays dense.
class NlpProblem {
 public:
  struct ObjectiveTerm {
    std::vector<int> vars;
    ScalarFn fn;
  };
  struct ConstraintBlock {
    std::vector<int> vars;
    int dim = 0;
    int row = 0;  // offset into the stacked constraint vector
    VectorFn fn;
  };

  explicit NlpProblem(int num_vars);

  int num_vars() const { return num_vars_; }
  int num_eq() const { return num_eq_; }
  int num_ineq() const { return num_ineq_; }

  void add_objective_term(std::vector<int> vars, ScalarFn fn);
  // Return the row offset of the added block in the stacked vector.
  int add_eq_block(std::vector<int> vars, int dim, VectorFn fn);
  int add_ineq_block(std::vector<int> vars, int dim, VectorFn fn);
  void set_bounds(int var, double lower, double upper);

  const VectorXd& lower_bounds() const { return lower_; }
  const VectorXd& upper_bounds() const { return upper_; }
  const std::vector<ObjectiveTerm>& objective_terms() const { return objective_terms_; }
  const std::vector<ConstraintBlock>& eq_blocks() const { return eq_blocks_; }
  const std::vector<ConstraintBlock>& ineq_blocks() const { return ineq_blocks_; }

  double objective(const VectorXd& x) const;
  VectorXd objective_gradient(const VectorXd& x) const;
  VectorXd eval_eq(const VectorXd& x) const;
  VectorXd eval_ineq(const VectorXd& x) const;
  MatrixXd eq_jacobian(const VectorXd& x) const;
  MatrixXd ineq_jacobian(const VectorXd& x) const;

  VectorXd clip_to_bounds(const VectorXd& x) const;

 private:
  int num_vars_ = 0;
  int num_eq_ = 0;
  int num_ineq_ = 0;
  std::vector<ObjectiveTerm> objective_terms_;
  std::vector<ConstraintBlock> eq_blocks_;
  std::vector<ConstraintBlock> ineq_blocks_;
  VectorXd lower_;
  VectorXd upper_;
};

struct SolverSettings {
  double kkt_tolerance = 1e-7;         // scaled stationarity target
  double constraint_tolerance = 1e-7;  // max-norm feasibility target
  int max_outer_iterations = 60;
  int max_inner_iterations = 400;  // per outer iteration
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  double multiplier_bound = 1e8;

  void validate() const;
};

enum class SolveStatus { converged, max_iterations, numerical_failure };

const char* to_string(SolveStatus s);

struct SolverReport {
  SolveStatus status = SolveStatus::max_iterations;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double objective = 0.0;
  double max_eq_violation = 0.0;
  double max_ineq_violation = 0.0;
  // Projected KKT residual divided by max(1, ||grad f||_inf); the scaling
  // keeps the target meaningful for badly scaled objectives.
  double stationarity = 0.0;
  double solve_seconds = 0.0;
};

// Multiplier state carried across solves (receding-horizon warm starts).
// On input, sizes must match the problem or be empty; on output holds the
// final multipliers and penalty.
struct WarmStart {
  VectorXd eq_multipliers;
  VectorXd ineq_multipliers;
  double penalty = 0.0;
};

struct SolveResult {
  VectorXd x;
  SolverReport report;
};

// Augmented-Lagrangian solve (Powell-Hestenes-Rockafellar multiplier
// updates, projected L-BFGS inner minimizer over the box bounds).
// x0 is clipped into the bounds before the first iteration. Deterministic:
// identical inputs produce identical iterates.
SolveResult solve(const NlpProblem& problem, const VectorXd& x0,
                  const SolverSettings& settings = {}, WarmStart* warm = nullptr);

struct KktResiduals {
  double stationarity = 0.0;
  double eq_violation = 0.0;
  double ineq_violation = 0.0;
  double complementarity = 0.0;
};

// Max-norm residuals of the KKT system at (x, lambda, mu); bound multipliers
// are handled implicitly by projecting the Lagrangian gradient onto the box.
KktResiduals kkt_residuals(const NlpProblem& problem, const VectorXd& x,
                           const VectorXd& eq_multipliers,
                           const VectorXd& ineq_multipliers);

}  // namespace topt::nlp
