#include "kfcs/simplex.hpp"

#include <cmath>
#include <limits>

namespace kfcs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Tableau {
  Matrix tab;               // rows x (ncols + 1); last column is the rhs
  std::vector<int> basis;   // basic column per row
  std::vector<char> banned; // columns excluded from pricing
  Vector redcost;           // length ncols
  double objective = 0.0;
  int rows = 0;
  int ncols = 0;

  double rhs(int i) const { return tab(i, ncols); }
};

int price_dantzig(const Tableau& t, double tol) {
  int best = -1;
  double best_val = -tol;
  for (int j = 0; j < t.ncols; ++j) {
    if (t.banned[j]) continue;
    if (t.redcost[j] < best_val) {
      best_val = t.redcost[j];
      best = j;
    }
  }
  return best;
}

int price_bland(const Tableau& t, double tol) {
  for (int j = 0; j < t.ncols; ++j) {
    if (!t.banned[j] && t.redcost[j] < -tol) return j;
  }
  return -1;
}

// Minimum-ratio row for the entering column; -1 when the column is
// nonpositive (unbounded ray). Under Bland's rule ties go to the smallest
// basic variable index, otherwise to the largest pivot element.
int ratio_test(const Tableau& t, int enter, double pivot_tol, bool bland) {
  int row = -1;
  double best_ratio = kInf;
  double best_key = -1.0;
  for (int i = 0; i < t.rows; ++i) {
    const double a = t.tab(i, enter);
    if (a <= pivot_tol) continue;
    const double ratio = std::max(t.rhs(i), 0.0) / a;
    const bool tie = row >= 0 && std::abs(ratio - best_ratio) <= 1e-10 * (1.0 + best_ratio);
    if (ratio < best_ratio - 1e-10 * (1.0 + best_ratio) || row < 0) {
      row = i;
      best_ratio = ratio;
      best_key = bland ? -static_cast<double>(t.basis[i]) : a;
    } else if (tie) {
      const double key = bland ? -static_cast<double>(t.basis[i]) : a;
      if (key > best_key) {
        row = i;
        best_ratio = std::min(best_ratio, ratio);
        best_key = key;
      }
    }
  }
  return row;
}

void pivot(Tableau& t, int row, int enter) {
  const double piv = t.tab(row, enter);
  t.tab.row(row) /= piv;
  const Eigen::RowVectorXd prow = t.tab.row(row);
  Vector factor = t.tab.col(enter);
  factor[row] = 0.0;
  t.tab.noalias() -= factor * prow;
  t.objective += t.redcost[enter] * prow[t.ncols];
  t.redcost -= t.redcost[enter] * prow.head(t.ncols).transpose();
  // Kill numerical drift in the entering column.
  t.tab.col(enter).setZero();
  t.tab(row, enter) = 1.0;
  t.redcost[enter] = 0.0;
  t.basis[row] = enter;
}

void compute_reduced_costs(Tableau& t, const Vector& cost) {
  t.redcost = cost.head(t.ncols);
  t.objective = 0.0;
  for (int i = 0; i < t.rows; ++i) {
    const double cb = cost[t.basis[i]];
    if (cb == 0.0) continue;
    t.redcost -= cb * t.tab.row(i).head(t.ncols).transpose();
    t.objective += cb * t.rhs(i);
  }
  for (int i = 0; i < t.rows; ++i) t.redcost[t.basis[i]] = 0.0;
}

// Returns kOptimal when no improving column remains.
LpStatus run_phase(Tableau& t, const SimplexOptions& opt, long max_iter,
                   long stall_limit, long& iterations) {
  bool bland = false;
  long stall = 0;
  double last_obj = t.objective;
  while (true) {
    const int enter = bland ? price_bland(t, opt.reduced_cost_tol)
                            : price_dantzig(t, opt.reduced_cost_tol);
    if (enter < 0) return LpStatus::kOptimal;
    const int row = ratio_test(t, enter, opt.pivot_tol, bland);
    if (row < 0) return LpStatus::kUnbounded;
    pivot(t, row, enter);
    ++iterations;
    if (iterations >= max_iter) return LpStatus::kIterationLimit;
    if (t.objective < last_obj - 1e-12 * (1.0 + std::abs(last_obj))) {
      last_obj = t.objective;
      stall = 0;
    } else if (++stall > stall_limit) {
      bland = true;
    }
  }
}

}  // namespace

LpOutcome solve_standard_form(const Matrix& a, const Vector& b, const Vector& c,
                              const SimplexOptions& options) {
  const int rows = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  if (b.size() != rows || c.size() != n)
    throw ParameterError("solve_standard_form: dimension mismatch");

  Tableau t;
  t.rows = rows;

  // Stage the constraints with nonnegative rhs, then pick a crash basis:
  // exact unit columns where present, artificials for the remaining rows.
  std::vector<char> negated(rows, 0);
  for (int i = 0; i < rows; ++i) negated[i] = b[i] < 0.0;

  t.basis.assign(rows, -1);
  std::vector<int> art_for_row;
  for (int j = 0; j < n; ++j) {
    int unit_row = -1;
    bool is_unit = true;
    for (int i = 0; i < rows && is_unit; ++i) {
      const double v = negated[i] ? -a(i, j) : a(i, j);
      if (v == 1.0 && unit_row < 0) unit_row = i;
      else if (v != 0.0) is_unit = false;
    }
    if (is_unit && unit_row >= 0 && t.basis[unit_row] < 0) t.basis[unit_row] = j;
  }
  for (int i = 0; i < rows; ++i)
    if (t.basis[i] < 0) art_for_row.push_back(i);

  const int n_art = static_cast<int>(art_for_row.size());
  t.ncols = n + n_art;
  t.tab.resize(rows, t.ncols + 1);
  t.tab.leftCols(n) = a;
  t.tab.middleCols(n, n_art).setZero();
  t.tab.col(t.ncols) = b;
  for (int i = 0; i < rows; ++i)
    if (negated[i]) t.tab.row(i).head(n) = -t.tab.row(i).head(n);
  for (int i = 0; i < rows; ++i)
    if (negated[i]) t.tab(i, t.ncols) = -t.tab(i, t.ncols);
  for (int k = 0; k < n_art; ++k) {
    t.tab(art_for_row[k], n + k) = 1.0;
    t.basis[art_for_row[k]] = n + k;
  }
  t.banned.assign(t.ncols, 0);

  const long max_iter =
      options.max_iterations > 0 ? options.max_iterations : 50L * t.ncols;
  const long stall_limit =
      options.stall_limit > 0 ? options.stall_limit : 3L * rows + 64;

  LpOutcome out;
  out.x = Vector::Zero(n);
  long iterations = 0;

  if (n_art > 0) {
    Vector phase1_cost = Vector::Zero(t.ncols);
    for (int k = 0; k < n_art; ++k) phase1_cost[n + k] = 1.0;
    compute_reduced_costs(t, phase1_cost);
    const LpStatus st = run_phase(t, options, max_iter, stall_limit, iterations);
    if (st == LpStatus::kIterationLimit) {
      out.status = st;
      out.iterations = iterations;
      return out;
    }
    if (t.objective > options.feasibility_tol) {
      out.status = LpStatus::kInfeasible;
      out.iterations = iterations;
      return out;
    }
    // Pivot artificials out of the basis where possible; a row that offers
    // no structural pivot is redundant and its artificial stays at level 0.
    for (int i = 0; i < rows; ++i) {
      if (t.basis[i] < n) continue;
      int enter = -1;
      for (int j = 0; j < n; ++j) {
        if (std::abs(t.tab(i, j)) > options.pivot_tol) {
          enter = j;
          break;
        }
      }
      if (enter >= 0) pivot(t, i, enter);
    }
    for (int j = n; j < t.ncols; ++j) t.banned[j] = 1;
  }

  Vector phase2_cost = Vector::Zero(t.ncols);
  phase2_cost.head(n) = c;
  compute_reduced_costs(t, phase2_cost);
  const LpStatus st = run_phase(t, options, max_iter, stall_limit, iterations);

  out.iterations = iterations;
  out.x = Vector::Zero(n);
  for (int i = 0; i < rows; ++i) {
    if (t.basis[i] < n) out.x[t.basis[i]] = std::max(t.rhs(i), 0.0);
  }
  out.objective = c.dot(out.x);
  out.status = st;
  return out;
}

}  // namespace kfcs
