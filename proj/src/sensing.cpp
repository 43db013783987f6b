#include "kfcs/sensing.hpp"

#include <omp.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

#include "kfcs/rng.hpp"

namespace kfcs {

namespace {

constexpr std::uint64_t kBinomialCap = std::numeric_limits<std::int64_t>::max();

// Smallest and largest eigenvalue of a symmetric positive semidefinite Gram
// block. Closed forms for orders 1 and 2 keep the enumeration hot loop cheap.
std::pair<double, double> eigen_extremes(const Matrix& g) {
  const auto s = g.rows();
  if (s == 1) return {g(0, 0), g(0, 0)};
  if (s == 2) {
    const double mean = 0.5 * (g(0, 0) + g(1, 1));
    const double disc = std::sqrt(0.25 * (g(0, 0) - g(1, 1)) * (g(0, 0) - g(1, 1)) +
                                  g(0, 1) * g(1, 0));
    return {mean - disc, mean + disc};
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

double subset_isometry_defect(const Matrix& gram, const std::vector<int>& t) {
  const int s = static_cast<int>(t.size());
  Matrix g(s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) g(i, j) = gram(t[i], t[j]);
  const auto [lo, hi] = eigen_extremes(g);
  return std::max(hi - 1.0, 1.0 - lo);
}

// Spectral norm of the cross-Gram block gram(t, tp), computed on the
// smaller side of B B'.
double cross_block_norm(const Matrix& gram, const std::vector<int>& t,
                        const std::vector<int>& tp) {
  const int s = static_cast<int>(t.size());
  const int sp = static_cast<int>(tp.size());
  Matrix b(s, sp);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < sp; ++j) b(i, j) = gram(t[i], tp[j]);
  const Matrix outer = (s <= sp) ? Matrix(b * b.transpose()) : Matrix(b.transpose() * b);
  const auto [lo, hi] = eigen_extremes(outer);
  (void)lo;
  return std::sqrt(std::max(hi, 0.0));
}

// Lexicographic successor of combination c over {0, ..., n-1}.
bool next_combination(std::vector<int>& c, int n) {
  const int k = static_cast<int>(c.size());
  for (int i = k - 1; i >= 0; --i) {
    if (c[i] < n - k + i) {
      ++c[i];
      for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

std::vector<int> first_combination(int k, int offset = 0) {
  std::vector<int> c(k);
  for (int i = 0; i < k; ++i) c[i] = offset + i;
  return c;
}

void check_rip_args(const SensingMatrix& a, int order) {
  if (order < 1 || order > a.cols())
    throw ParameterError("rip order must satisfy 1 <= S <= m");
}

// Max theta over all size-sp subsets of comp (the complement of a fixed t).
double max_theta_over_complement(const Matrix& gram, const std::vector<int>& t,
                                 const std::vector<int>& comp, int sp) {
  double best = 0.0;
  if (static_cast<int>(comp.size()) < sp) return best;
  std::vector<int> pick = first_combination(sp);
  std::vector<int> tp(sp);
  do {
    for (int j = 0; j < sp; ++j) tp[j] = comp[pick[j]];
    best = std::max(best, cross_block_norm(gram, t, tp));
  } while (next_combination(pick, static_cast<int>(comp.size())));
  return best;
}

}  // namespace

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (r > kBinomialCap) return kBinomialCap;
  }
  return static_cast<std::uint64_t>(r);
}

SensingMatrix generate_gaussian_matrix(int n, int m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw ParameterError("matrix dimensions must be positive");
  Rng rng(seed);
  Matrix a(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = rng.normal();
  for (int j = 0; j < m; ++j) {
    const double norm = a.col(j).norm();
    if (norm > 0.0) a.col(j) /= norm;
  }
  return SensingMatrix{std::move(a)};
}

RipReport rip_constant(const SensingMatrix& a, int order, std::uint64_t budget) {
  check_rip_args(a, order);
  const int m = a.cols();
  const std::uint64_t count = binomial(m, order);
  if (count > budget)
    throw BudgetExceededError("rip enumeration needs " + std::to_string(count) +
                              " subsets, budget is " + std::to_string(budget));
  const Matrix gram = a.entries.transpose() * a.entries;

  double best = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(max : best)
  for (int first = 0; first <= m - order; ++first) {
    std::vector<int> t(order);
    t[0] = first;
    if (order == 1) {
      best = std::max(best, subset_isometry_defect(gram, t));
      continue;
    }
    std::vector<int> rest = first_combination(order - 1, first + 1);
    do {
      for (int j = 1; j < order; ++j) t[j] = rest[j - 1];
      best = std::max(best, subset_isometry_defect(gram, t));
    } while (next_combination(rest, m));
  }
  return RipReport{order, std::max(best, 0.0), count};
}

RocReport roc_constant(const SensingMatrix& a, int order, int order2,
                       std::uint64_t budget) {
  check_rip_args(a, order);
  check_rip_args(a, order2);
  const int m = a.cols();
  if (order + order2 > m) return RocReport{order, order2, 0.0, 0};

  const std::uint64_t count = binomial(m, order);
  const std::uint64_t inner = binomial(m - order, order2);
  if (count > budget / std::max<std::uint64_t>(inner, 1) || count * inner > budget)
    throw BudgetExceededError("roc enumeration needs " + std::to_string(count) + " x " +
                              std::to_string(inner) + " pairs, budget is " +
                              std::to_string(budget));
  const Matrix gram = a.entries.transpose() * a.entries;

  double best = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(max : best)
  for (int first = 0; first <= m - order; ++first) {
    std::vector<int> t(order);
    t[0] = first;
    std::vector<int> comp;
    comp.reserve(m - order);
    std::vector<int> rest;
    if (order > 1) rest = first_combination(order - 1, first + 1);
    do {
      for (int j = 1; j < order; ++j) t[j] = rest[j - 1];
      comp.clear();
      int k = 0;
      for (int i = 0; i < m; ++i) {
        if (k < order && t[k] == i) {
          ++k;
          continue;
        }
        comp.push_back(i);
      }
      best = std::max(best, max_theta_over_complement(gram, t, comp, order2));
    } while (order > 1 && next_combination(rest, m));
  }
  return RocReport{order, order2, best, count * inner};
}

CriticalSparsities critical_sparsities(const SensingMatrix& a, int s_limit,
                                       std::uint64_t budget) {
  const int m = a.cols();
  CriticalSparsities out;
  for (int s = 1; s <= std::min(s_limit, m); ++s) {
    if (rip_constant(a, s, budget).delta < 0.5) out.s_star = s;
    else break;  // delta_S is nondecreasing in S
  }
  // No early exit here: theta_{S,2S} drops to zero once 3S > m, so the
  // qualifying set need not be a prefix.
  for (int s = 1; s <= s_limit && 2 * s <= m; ++s) {
    const double d2 = rip_constant(a, 2 * s, budget).delta;
    const double th = (3 * s <= m) ? roc_constant(a, s, 2 * s, budget).theta : 0.0;
    if (d2 + th < 1.0) out.s_star_star = s;
  }
  return out;
}

namespace serial {

RipReport rip_constant(const SensingMatrix& a, int order, std::uint64_t budget) {
  check_rip_args(a, order);
  const int m = a.cols();
  const std::uint64_t count = binomial(m, order);
  if (count > budget) throw BudgetExceededError("rip enumeration exceeds budget");
  const Matrix gram = a.entries.transpose() * a.entries;
  double best = 0.0;
  std::vector<int> t = first_combination(order);
  do {
    best = std::max(best, subset_isometry_defect(gram, t));
  } while (next_combination(t, m));
  return RipReport{order, std::max(best, 0.0), count};
}

RocReport roc_constant(const SensingMatrix& a, int order, int order2,
                       std::uint64_t budget) {
  check_rip_args(a, order);
  check_rip_args(a, order2);
  const int m = a.cols();
  if (order + order2 > m) return RocReport{order, order2, 0.0, 0};
  const std::uint64_t count = binomial(m, order);
  const std::uint64_t inner = binomial(m - order, order2);
  if (count > budget / std::max<std::uint64_t>(inner, 1) || count * inner > budget)
    throw BudgetExceededError("roc enumeration exceeds budget");
  const Matrix gram = a.entries.transpose() * a.entries;
  double best = 0.0;
  std::vector<int> t = first_combination(order);
  std::vector<int> comp;
  do {
    comp.clear();
    int k = 0;
    for (int i = 0; i < m; ++i) {
      if (k < order && t[k] == i) {
        ++k;
        continue;
      }
      comp.push_back(i);
    }
    best = std::max(best, max_theta_over_complement(gram, t, comp, order2));
  } while (next_combination(t, m));
  return RocReport{order, order2, best, count * inner};
}

}  // namespace serial

}  // namespace kfcs
