#pragma once

#include <cstdint>

#include "kfcs/estimators.hpp"
#include "kfcs/models.hpp"
#include "kfcs/types.hpp"

namespace kfcs {

// Gaussian upper-tail probability, accurate to ~1e-15 absolute.
double q_function(double z);

// Inverse of q_function on (0, 1), by bracketed bisection.
double q_inverse(double p);

// Detection level B_* = C1 * S_max * lambda^2.
double bstar(int s_max, double lambda, double c1);

struct StabilityInputs {
  double epsilon = 0.05;   // per-event failure probability
  int additions = 1;       // S, coefficients added per event
  int s_max = 1;
  double lambda = 1.0;
  double c1 = 1.0;         // Dantzig error constant C1(S_max)
  double sigma_sys2 = 1.0; // walk variance
};

// High-probability detection delay:
//   ceil(4 B_* / (sigma_sys^2 [Qinv((1-eps)^{1/S}/2)]^2)) - 1.
int detection_delay(double epsilon, int additions, double bstar_value,
                    double sigma_sys2);
int detection_delay(const StabilityInputs& in);

// One step of the a_t / b_t bound recursions. `support_changed` selects the
// re-initialized branch (always taken on the first step). Works with
// variance_ratio = +infinity, which reproduces the LS-residual limit
// a_t = 1/(1 - delta).
class BoundRecursion {
 public:
  explicit BoundRecursion(double variance_ratio) : r_(variance_ratio) {}

  struct Step {
    double a = 0.0;
    double b = 0.0;
  };
  Step advance(double delta, bool support_changed);

 private:
  double r_;
  bool started_ = false;
  double a_prev_ = 0.0;
  double lmin_prev_ = 0.0;
};

// Per-time bound quantities along one estimator run. Index 0 is unused
// padding so entry t refers to time t (t >= 1).
struct BoundTrace {
  std::vector<double> a, b, delta, theta, t1, beta_bound;
  std::vector<int> support_size, unknown_size;
};

// est_supports / est_xhat are the estimator outputs per time (t = 0..horizon);
// noise[t] is the measurement noise at t (index 0 unused). RIP/ROC constants
// are computed exactly through the sensing module and cached per order.
BoundTrace bound_trace(const SparseTrajectory& traj,
                       const std::vector<IndexSet>& est_supports,
                       const std::vector<Vector>& est_xhat,
                       const std::vector<Vector>& noise, const SensingMatrix& a,
                       double variance_ratio,
                       std::uint64_t budget = 2'000'000);

// Empirical delay until the tracked filter lands within epsilon_err of the
// oracle filter, with probability at least 1 - epsilon across trials.
// Both filters run the same constant-support Kalman recursion and differ
// only in their initial state. Returns `horizon` when the target fraction
// is never reached.
struct TauKfScenario {
  int m = 0;
  int n = 0;
  IndexSet support;          // constant true support
  double sigma_sys0 = 1.0;   // prior std dev at the start time
  AlgorithmConfig cfg;
  NoiseSpec noise;
  int horizon = 0;
  std::uint64_t matrix_seed = 1;
  bool identical_init = false;  // start the tracked filter at the oracle state
};

int estimate_tau_kf(const TauKfScenario& scenario, double epsilon, double epsilon_err,
                    int trials, std::uint64_t seed);

}  // namespace kfcs
