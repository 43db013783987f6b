#pragma once

#include <cstdint>
#include <utility>

#include "kfcs/types.hpp"

namespace kfcs {

// Exact restricted-isometry constant of order S, plus the enumeration size.
struct RipReport {
  int order = 0;
  double delta = 0.0;
  std::uint64_t subset_count = 0;
};

// Exact restricted-orthogonality constant for disjoint subset sizes (S, Sp).
struct RocReport {
  int order = 0;
  int order2 = 0;
  double theta = 0.0;
  std::uint64_t pair_count = 0;
};

inline constexpr std::uint64_t kDefaultEnumerationBudget = 2'000'000;

// n x m matrix of i.i.d. standard normal entries with every column rescaled
// to unit Euclidean norm. Bit-reproducible for a given seed.
SensingMatrix generate_gaussian_matrix(int n, int m, std::uint64_t seed);

// delta_S = max over all size-S column subsets T of
//   max(lambda_max(A_T'A_T) - 1, 1 - lambda_min(A_T'A_T)), clamped at 0.
// Exhaustive over all C(m, S) subsets; throws BudgetExceededError when the
// subset count exceeds the budget.
RipReport rip_constant(const SensingMatrix& a, int order,
                       std::uint64_t budget = kDefaultEnumerationBudget);

// theta_{S,Sp} = max spectral norm of A_T' A_Tp over disjoint T (|T|=S) and
// Tp (|Tp|=Sp). Zero when no disjoint pair exists. Exhaustive over all
// C(m,S) * C(m-S,Sp) pairs, against the same budget.
RocReport roc_constant(const SensingMatrix& a, int order, int order2,
                       std::uint64_t budget = kDefaultEnumerationBudget);

// Largest S <= s_limit with delta_S < 1/2, and largest S <= s_limit with
// delta_{2S} + theta_{S,2S} < 1 (each 0 when no S qualifies).
struct CriticalSparsities {
  int s_star = 0;
  int s_star_star = 0;
};
CriticalSparsities critical_sparsities(const SensingMatrix& a, int s_limit,
                                       std::uint64_t budget = kDefaultEnumerationBudget);

namespace serial {
// Single-threaded reference enumerations, kept for cross-checking the
// OpenMP kernels and for the benchmark target.
RipReport rip_constant(const SensingMatrix& a, int order,
                       std::uint64_t budget = kDefaultEnumerationBudget);
RocReport roc_constant(const SensingMatrix& a, int order, int order2,
                       std::uint64_t budget = kDefaultEnumerationBudget);
}  // namespace serial

// C(n, k) saturating at 2^63-1.
std::uint64_t binomial(int n, int k);

}  // namespace kfcs
