#pragma once

#include "kfcs/simplex.hpp"
#include "kfcs/types.hpp"

namespace kfcs {

inline constexpr double kDefaultSolverTol = 1e-8;
inline constexpr double kConditionLimit = 1e12;

struct DantzigProblem {
  SensingMatrix a;
  Vector y;
  double lambda = 0.0;
};

struct LpSolution {
  Vector zeta;
  double objective = 0.0;
  LpStatus status = LpStatus::kInfeasible;
  long iterations = 0;
};

// Dantzig-selector solver bound to one measurement matrix; caches A'A so
// repeated solves against the same operator skip the Gram product. Solves
//   min ||zeta||_1  s.t.  ||A'(y - A zeta)||_inf <= lambda
// exactly via the LP reformulation zeta = u - v, u, v >= 0.
class DantzigSelector {
 public:
  explicit DantzigSelector(SensingMatrix a);

  LpSolution solve(const Vector& y, double lambda, double tol = kDefaultSolverTol) const;

  const SensingMatrix& matrix() const { return a_; }
  const Matrix& gram() const { return gram_; }

 private:
  SensingMatrix a_;
  Matrix gram_;
};

LpSolution solve_dantzig(const DantzigProblem& p, double tol = kDefaultSolverTol);

// Least squares restricted to a support; zero off-support. When A_T is
// column-rank-deficient (or its Gram conditioning exceeds kConditionLimit),
// indices of smallest priority are dropped one at a time until the fit is
// well posed. Without a caller-supplied priority the minimum-norm solution
// magnitudes decide which index goes.
struct LeastSquaresResult {
  Vector xhat;
  IndexSet support;  // indices that survived rank repair
  int dropped = 0;
  bool ill_conditioned = false;
};
LeastSquaresResult least_squares_on_support(const Matrix& a, const Vector& y,
                                            IndexSet support,
                                            const Vector* drop_priority = nullptr);

// Two-stage Gauss-Dantzig estimate: Dantzig selector, keep |zeta_i| >
// support_threshold, then least squares on the kept support (rank repair
// drops the smallest |zeta_i| first).
struct SupportEstimate {
  Vector xhat;
  IndexSet support;
  int dropped = 0;
  bool ill_conditioned = false;
};
SupportEstimate gauss_dantzig(const DantzigSelector& solver, const Vector& y,
                              double lambda, double support_threshold,
                              double tol = kDefaultSolverTol);

}  // namespace kfcs
