#include "topt/nlp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace topt::nlp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_vars(const std::vector<int>& vars, int num_vars) {
  for (int v : vars) {
    if (v < 0 || v >= num_vars) {
      throw std::invalid_argument("nlp: variable index out of range");
    }
  }
}
}  // namespace

VectorXd gradient(const std::function<Dual(CSpan<Dual>)>& f, const VectorXd& x) {
  const int n = static_cast<int>(x.size());
  std::vector<Dual> xd(x.data(), x.data() + n);
  VectorXd grad(n);
  for (int i = 0; i < n; ++i) {
    xd[i].dot = 1.0;
    const Dual out = f(CSpan<Dual>(xd));
    xd[i].dot = 0.0;
    if (!isfinite(out)) {
      throw std::domain_error("gradient: non-finite value while seeding variable " +
                              std::to_string(i));
    }
    grad[i] = out.dot;
  }
  return grad;
}

MatrixXd jacobian(const std::function<void(CSpan<Dual>, MSpan<Dual>)>& g, int m,
                  const VectorXd& x) {
  const int n = static_cast<int>(x.size());
  std::vector<Dual> xd(x.data(), x.data() + n);
  std::vector<Dual> out(m);
  MatrixXd jac(m, n);
  for (int i = 0; i < n; ++i) {
    xd[i].dot = 1.0;
    g(CSpan<Dual>(xd), MSpan<Dual>(out));
    xd[i].dot = 0.0;
    for (int r = 0; r < m; ++r) {
      if (!isfinite(out[r])) {
        throw std::domain_error("jacobian: non-finite value at row " + std::to_string(r) +
                                " while seeding variable " + std::to_string(i));
      }
      jac(r, i) = out[r].dot;
    }
  }
  return jac;
}

NlpProblem::NlpProblem(int num_vars) : num_vars_(num_vars) {
  if (num_vars <= 0) {
    throw std::invalid_argument("nlp: num_vars must be positive");
  }
  lower_ = VectorXd::Constant(num_vars, -kInf);
  upper_ = VectorXd::Constant(num_vars, kInf);
}

void NlpProblem::add_objective_term(std::vector<int> vars, ScalarFn fn) {
  check_vars(vars, num_vars_);
  objective_terms_.push_back({std::move(vars), std::move(fn)});
}

int NlpProblem::add_eq_block(std::vector<int> vars, int dim, VectorFn fn) {
  check_vars(vars, num_vars_);
  const int row = num_eq_;
  eq_blocks_.push_back({std::move(vars), dim, row, std::move(fn)});
  num_eq_ += dim;
  return row;
}

int NlpProblem::add_ineq_block(std::vector<int> vars, int dim, VectorFn fn) {
  check_vars(vars, num_vars_);
  const int row = num_ineq_;
  ineq_blocks_.push_back({std::move(vars), dim, row, std::move(fn)});
  num_ineq_ += dim;
  return row;
}

void NlpProblem::set_bounds(int var, double lower, double upper) {
  if (var < 0 || var >= num_vars_) {
    throw std::invalid_argument("nlp: bound index out of range");
  }
  if (lower > upper) {
    throw std::invalid_argument("nlp: lower bound above upper bound");
  }
  lower_[var] = lower;
  upper_[var] = upper;
}

double NlpProblem::objective(const VectorXd& x) const {
  double total = 0.0;
  std::vector<double> local;
  for (const ObjectiveTerm& term : objective_terms_) {
    local.resize(term.vars.size());
    for (std::size_t j = 0; j < term.vars.size(); ++j) local[j] = x[term.vars[j]];
    total += term.fn(CSpan<double>(local));
  }
  return total;
}

VectorXd NlpProblem::objective_gradient(const VectorXd& x) const {
  VectorXd grad = VectorXd::Zero(num_vars_);
  std::vector<Dual> local;
  for (const ObjectiveTerm& term : objective_terms_) {
    const int k = static_cast<int>(term.vars.size());
    local.resize(k);
    for (int j = 0; j < k; ++j) local[j] = Dual(x[term.vars[j]]);
    for (int j = 0; j < k; ++j) {
      local[j].dot = 1.0;
      const Dual out = term.fn(CSpan<Dual>(local));
      local[j].dot = 0.0;
      grad[term.vars[j]] += out.dot;
    }
  }
  return grad;
}

namespace {

VectorXd eval_blocks(const std::vector<NlpProblem::ConstraintBlock>& blocks, int total,
                     const VectorXd& x) {
  VectorXd out(total);
  std::vector<double> local;
  std::vector<double> vals;
  for (const auto& block : blocks) {
    local.resize(block.vars.size());
    for (std::size_t j = 0; j < block.vars.size(); ++j) local[j] = x[block.vars[j]];
    vals.resize(block.dim);
    block.fn(CSpan<double>(local), MSpan<double>(vals));
    for (int r = 0; r < block.dim; ++r) out[block.row + r] = vals[r];
  }
  return out;
}

MatrixXd jacobian_blocks(const std::vector<NlpProblem::ConstraintBlock>& blocks, int total,
                         const VectorXd& x, int num_vars) {
  MatrixXd jac = MatrixXd::Zero(total, num_vars);
  std::vector<Dual> local;
  std::vector<Dual> vals;
  for (const auto& block : blocks) {
    const int k = static_cast<int>(block.vars.size());
    local.resize(k);
    for (int j = 0; j < k; ++j) local[j] = Dual(x[block.vars[j]]);
    vals.resize(block.dim);
    for (int j = 0; j < k; ++j) {
      local[j].dot = 1.0;
      block.fn(CSpan<Dual>(local), MSpan<Dual>(vals));
      local[j].dot = 0.0;
      for (int r = 0; r < block.dim; ++r) {
        jac(block.row + r, block.vars[j]) += vals[r].dot;
      }
    }
  }
  return jac;
}

}  // namespace

VectorXd NlpProblem::eval_eq(const VectorXd& x) const {
  return eval_blocks(eq_blocks_, num_eq_, x);
}

VectorXd NlpProblem::eval_ineq(const VectorXd& x) const {
  return eval_blocks(ineq_blocks_, num_ineq_, x);
}

MatrixXd NlpProblem::eq_jacobian(const VectorXd& x) const {
  return jacobian_blocks(eq_blocks_, num_eq_, x, num_vars_);
}

MatrixXd NlpProblem::ineq_jacobian(const VectorXd& x) const {
  return jacobian_blocks(ineq_blocks_, num_ineq_, x, num_vars_);
}

VectorXd NlpProblem::clip_to_bounds(const VectorXd& x) const {
  return x.cwiseMax(lower_).cwiseMin(upper_);
}

void SolverSettings::validate() const {
  if (kkt_tolerance <= 0 || constraint_tolerance <= 0 || initial_penalty <= 0 ||
      multiplier_bound <= 0 || max_outer_iterations <= 0 || max_inner_iterations <= 0) {
    throw std::invalid_argument("solver settings must be positive");
  }
  if (penalty_growth <= 1.0) {
    throw std::invalid_argument("penalty_growth must exceed 1");
  }
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iterations:
      return "max_iterations";
    case SolveStatus::numerical_failure:
      return "numerical_failure";
  }
  return "unknown";
}

KktResiduals kkt_residuals(const NlpProblem& problem, const VectorXd& x,
                           const VectorXd& eq_multipliers,
                           const VectorXd& ineq_multipliers) {
  if (eq_multipliers.size() != problem.num_eq() ||
      ineq_multipliers.size() != problem.num_ineq()) {
    throw std::invalid_argument("kkt_residuals: multiplier dimension mismatch");
  }
  KktResiduals r;
  VectorXd grad_l = problem.objective_gradient(x);
  if (problem.num_eq() > 0) {
    const VectorXd g = problem.eval_eq(x);
    grad_l += problem.eq_jacobian(x).transpose() * eq_multipliers;
    r.eq_violation = g.size() > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
  }
  if (problem.num_ineq() > 0) {
    const VectorXd h = problem.eval_ineq(x);
    grad_l += problem.ineq_jacobian(x).transpose() * ineq_multipliers;
    r.ineq_violation = h.cwiseMax(0.0).maxCoeff();
    r.complementarity = (ineq_multipliers.array() * h.array()).abs().maxCoeff();
  }
  const VectorXd projected = problem.clip_to_bounds(x - grad_l);
  r.stationarity = (x - projected).cwiseAbs().maxCoeff();
  return r;
}

}  // namespace topt::nlp
