#include "kfcs/dantzig.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace kfcs {

DantzigSelector::DantzigSelector(SensingMatrix a)
    : a_(std::move(a)), gram_(a_.entries.transpose() * a_.entries) {}

LpSolution DantzigSelector::solve(const Vector& y, double lambda, double tol) const {
  if (y.size() != a_.rows()) throw ParameterError("dantzig: y length != rows of A");
  if (!(lambda > 0.0)) throw ParameterError("dantzig: lambda must be positive");
  if (!(tol > 0.0)) throw ParameterError("dantzig: tol must be positive");

  const int m = a_.cols();
  const Vector d = a_.entries.transpose() * y;

  // Structural variables [u, v, s+, s-]:
  //    G (u - v) + s+ = d + lambda
  //   -G (u - v) + s- = lambda - d
  Matrix lhs = Matrix::Zero(2 * m, 4 * m);
  lhs.block(0, 0, m, m) = gram_;
  lhs.block(0, m, m, m) = -gram_;
  lhs.block(m, 0, m, m) = -gram_;
  lhs.block(m, m, m, m) = gram_;
  lhs.block(0, 2 * m, m, m) = Matrix::Identity(m, m);
  lhs.block(m, 3 * m, m, m) = Matrix::Identity(m, m);

  Vector rhs(2 * m);
  rhs.head(m) = d.array() + lambda;
  rhs.tail(m) = lambda - d.array();

  Vector cost = Vector::Zero(4 * m);
  cost.head(2 * m).setOnes();

  SimplexOptions opts;
  opts.reduced_cost_tol = tol * 0.1;
  opts.feasibility_tol = tol;
  const LpOutcome out = solve_standard_form(lhs, rhs, cost, opts);

  LpSolution sol;
  sol.iterations = out.iterations;
  // The L1 program is never unbounded, so an unbounded ray can only mean
  // numerical breakdown; surface it the same way as infeasibility.
  sol.status = out.status == LpStatus::kUnbounded ? LpStatus::kInfeasible : out.status;
  if (out.x.size() > 0) {
    sol.zeta = out.x.head(m) - out.x.segment(m, m);
    sol.objective = sol.zeta.lpNorm<1>();
  } else {
    sol.zeta = Vector::Zero(m);
  }
  return sol;
}

LpSolution solve_dantzig(const DantzigProblem& p, double tol) {
  return DantzigSelector(p.a).solve(p.y, p.lambda, tol);
}

LeastSquaresResult least_squares_on_support(const Matrix& a, const Vector& y,
                                            IndexSet support,
                                            const Vector* drop_priority) {
  const int m = static_cast<int>(a.cols());
  LeastSquaresResult result;
  while (true) {
    if (support.empty()) {
      result.xhat = Vector::Zero(m);
      result.support = {};
      return result;
    }
    const Matrix at = submatrix_cols(a, support);
    const Matrix gram = at.transpose() * at;
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    const bool deficient = static_cast<Eigen::Index>(support.size()) > a.rows() ||
                           lo <= 0.0 || hi > lo * kConditionLimit;
    if (!deficient) {
      const Vector coef = es.eigenvectors() *
                          (es.eigenvectors().transpose() * (at.transpose() * y))
                              .cwiseQuotient(es.eigenvalues());
      result.xhat = scatter(coef, support, m);
      result.support = support;
      return result;
    }

    result.ill_conditioned = true;
    ++result.dropped;
    // Minimum-norm fallback fit decides the drop when no priority is given.
    Vector fallback;
    if (drop_priority == nullptr) {
      const Vector b = at.transpose() * y;
      const Vector proj = es.eigenvectors().transpose() * b;
      Vector inv = es.eigenvalues();
      for (Eigen::Index k = 0; k < inv.size(); ++k)
        inv[k] = inv[k] > hi * 1e-12 ? proj[k] / inv[k] : 0.0;
      fallback = es.eigenvectors() * inv;
    }
    std::size_t drop_pos = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < support.size(); ++k) {
      const double mag = drop_priority
                             ? std::abs((*drop_priority)[support[k]])
                             : std::abs(fallback[static_cast<Eigen::Index>(k)]);
      if (mag < best) {
        best = mag;
        drop_pos = k;
      }
    }
    support.erase(support.begin() + static_cast<std::ptrdiff_t>(drop_pos));
  }
}

SupportEstimate gauss_dantzig(const DantzigSelector& solver, const Vector& y,
                              double lambda, double support_threshold, double tol) {
  if (support_threshold < 0.0)
    throw ParameterError("gauss_dantzig: support threshold must be >= 0");
  const LpSolution sol = solver.solve(y, lambda, tol);
  if (sol.status != LpStatus::kOptimal)
    throw NumericalError("gauss_dantzig: Dantzig selector did not reach optimality");

  IndexSet support;
  for (int i = 0; i < solver.matrix().cols(); ++i) {
    if (std::abs(sol.zeta[i]) > support_threshold) support.push_back(i);
  }
  const Vector priority = sol.zeta;
  const LeastSquaresResult ls =
      least_squares_on_support(solver.matrix().entries, y, std::move(support), &priority);
  return SupportEstimate{ls.xhat, ls.support, ls.dropped, ls.ill_conditioned};
}

}  // namespace kfcs
