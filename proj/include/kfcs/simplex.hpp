#pragma once

#include "kfcs/types.hpp"

namespace kfcs {

enum class LpStatus { kOptimal, kInfeasible, kIterationLimit, kUnbounded };

struct LpOutcome {
  LpStatus status = LpStatus::kInfeasible;
  Vector x;
  double objective = 0.0;
  long iterations = 0;
};

struct SimplexOptions {
  double reduced_cost_tol = 1e-9;
  double pivot_tol = 1e-10;
  double feasibility_tol = 1e-8;
  // <= 0 means "50 * number of columns".
  long max_iterations = 0;
  // Iterations without objective progress before switching to Bland's rule.
  long stall_limit = 0;  // <= 0 means "3 * rows + 64"
};

// Two-phase dense primal simplex for  min c'x  s.t.  a x = b, x >= 0.
// Pivoting uses the most-negative reduced cost (ties to the lowest column
// index) and falls back to Bland's rule permanently once the objective
// stalls, which guarantees termination on degenerate problems.
LpOutcome solve_standard_form(const Matrix& a, const Vector& b, const Vector& c,
                              const SimplexOptions& options = {});

}  // namespace kfcs
