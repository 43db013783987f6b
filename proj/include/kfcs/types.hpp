#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kfcs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Sorted, duplicate-free list of column/coefficient indices.
using IndexSet = std::vector<int>;

// Enumeration cost of an exact RIP/ROC computation exceeds the caller's budget.
struct BudgetExceededError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Signal-model or experiment parameters are mutually inconsistent.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Unrecoverable numerical breakdown (distinct from per-trial ill-conditioning,
// which is recorded as an event and survived).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Measurement operator with unit-norm columns, n rows x m columns.
// n < m in compressive use; taller matrices are allowed for oracle/testing use.
struct SensingMatrix {
  Matrix entries;

  int rows() const { return static_cast<int>(entries.rows()); }
  int cols() const { return static_cast<int>(entries.cols()); }
};

inline bool has_unit_columns(const Matrix& a, double tol = 1e-10) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    if (std::abs(a.col(j).norm() - 1.0) > tol) return false;
  }
  return true;
}

inline bool is_sorted_unique(const IndexSet& s) {
  return std::is_sorted(s.begin(), s.end()) &&
         std::adjacent_find(s.begin(), s.end()) == s.end();
}

inline bool set_contains(const IndexSet& s, int i) {
  return std::binary_search(s.begin(), s.end(), i);
}

inline IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline IndexSet set_difference(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  out.reserve(a.size());
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline IndexSet set_intersection(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// Columns of a restricted to the indices in t, in index order.
inline Matrix submatrix_cols(const Matrix& a, const IndexSet& t) {
  Matrix out(a.rows(), static_cast<Eigen::Index>(t.size()));
  for (std::size_t k = 0; k < t.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = a.col(t[k]);
  return out;
}

inline Vector subvector(const Vector& v, const IndexSet& t) {
  Vector out(static_cast<Eigen::Index>(t.size()));
  for (std::size_t k = 0; k < t.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[t[k]];
  return out;
}

// Scatter block values back into an m-vector that is zero off t.
inline Vector scatter(const Vector& values, const IndexSet& t, int m) {
  Vector out = Vector::Zero(m);
  for (std::size_t k = 0; k < t.size(); ++k) out[t[k]] = values[static_cast<Eigen::Index>(k)];
  return out;
}

}  // namespace kfcs
