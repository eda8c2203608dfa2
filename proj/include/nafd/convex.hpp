#pragma once

#include <limits>
#include <ostream>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "nafd/types.hpp"

namespace nafd {

/// weight * ln(a^T x + b)
struct LogTerm {
  std::vector<double> a;
  double b = 0.0;
  double weight = 1.0;
};

/// a^T x <= rhs
struct AffineConstraint {
  std::vector<double> a;
  double rhs = 0.0;
};

/// a^T x - log_weight * ln(x[log_var]) <= rhs
struct AffineMinusLogConstraint {
  std::vector<double> a;
  double rhs = 0.0;
  int log_var = 0;
  double log_weight = 0.0;
};

/// maximize  sum_i LogTerm_i(x) + linear_obj^T x + constant
/// subject to affine and affine-minus-log constraints and box bounds.
struct ConvexProblem {
  int n_vars = 0;
  std::vector<LogTerm> log_terms;
  std::vector<double> linear_obj;
  double constant = 0.0;
  std::vector<AffineConstraint> affine_cons;
  std::vector<AffineMinusLogConstraint> affine_minus_log_cons;
  std::vector<double> lower_bounds;  // -inf for none
  std::vector<double> upper_bounds;  // +inf for none

  explicit ConvexProblem(int n = 0)
      : n_vars(n),
        linear_obj(n, 0.0),
        lower_bounds(n, -std::numeric_limits<double>::infinity()),
        upper_bounds(n, std::numeric_limits<double>::infinity()) {}

  double objective(const RVec& x) const;
  /// Smallest inequality slack (bounds included, log arguments included).
  /// Returns -inf if any log argument or log variable is non-positive.
  double min_slack(const RVec& x) const;
  int n_inequalities() const;
  void validate() const;
};

enum class SolveStatus { Optimal, MaxIter, NumericalFailure };
std::string_view status_name(SolveStatus s);

struct SolveResult {
  RVec x_opt;
  double obj = 0.0;
  double kkt_residual = 0.0;
  int barrier_outer_iters = 0;
  int newton_iters = 0;
  double barrier_t = 0.0;
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<double> outer_objectives;  // objective after each centering step
};

struct BarrierOptions {
  double alpha = 0.25;  // Armijo fraction
  double beta = 0.5;    // backtracking factor
  double mu = 10.0;     // t multiplier
  double t0 = 1.0;
  double gap_tol = 1e-8;  // stop when m / t <= gap_tol
  int max_newton = 500;   // total over all centering steps
  double newton_tol = 1e-12;  // lambda^2 / 2
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Log-barrier interior-point method with damped Newton centering. x0 must
/// be strictly feasible; SolverError otherwise.
SolveResult solve(const ConvexProblem& p, const RVec& x0, const BarrierOptions& opt = {});

/// Scale-free stationarity residual max_i |x_i| |(grad f - sum lambda_c grad c)_i|
/// plus complementarity. With barrier_t > 0 the multipliers are the barrier
/// ones, 1/(t * slack); otherwise they are fitted by non-negative least squares
/// over the (relatively) active constraints.
double check_kkt(const ConvexProblem& p, const RVec& x, double barrier_t = 0.0);

/// Plain-text coefficient listing for regression fixtures.
void write_problem(std::ostream& os, const ConvexProblem& p);

}  // namespace nafd
