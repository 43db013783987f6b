#include "kfcs/stability.hpp"

#include <omp.h>

#include <cmath>
#include <limits>
#include <map>

#include "kfcs/rng.hpp"
#include "kfcs/sensing.hpp"

namespace kfcs {

double q_function(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double q_inverse(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw ParameterError("q_inverse: argument must lie in (0, 1)");
  double lo = -40.0, hi = 40.0;
  // q_function is strictly decreasing: q(lo) ~ 1, q(hi) ~ 0.
  for (int iter = 0; iter < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (q_function(mid) > p) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double bstar(int s_max, double lambda, double c1) {
  if (s_max < 1 || !(lambda > 0.0) || !(c1 > 0.0))
    throw ParameterError("bstar: inputs must be positive");
  return c1 * s_max * lambda * lambda;
}

int detection_delay(double epsilon, int additions, double bstar_value,
                    double sigma_sys2) {
  if (!(epsilon > 0.0) || !(epsilon < 1.0))
    throw ParameterError("detection_delay: epsilon must lie in (0, 1)");
  if (additions < 1) throw ParameterError("detection_delay: additions must be >= 1");
  if (!(bstar_value > 0.0) || !(sigma_sys2 > 0.0))
    throw ParameterError("detection_delay: bstar and walk variance must be positive");
  const double arg = std::pow(1.0 - epsilon, 1.0 / additions) / 2.0;
  const double z = q_inverse(arg);
  return static_cast<int>(std::ceil(4.0 * bstar_value / (sigma_sys2 * z * z))) - 1;
}

int detection_delay(const StabilityInputs& in) {
  return detection_delay(in.epsilon, in.additions, bstar(in.s_max, in.lambda, in.c1),
                         in.sigma_sys2);
}

BoundRecursion::Step BoundRecursion::advance(double delta, bool support_changed) {
  if (!started_) {
    support_changed = true;  // the filter starts from an LS-style covariance
    started_ = true;
  }
  Step s;
  // The contraction argument needs delta < 1; past that the bound is vacuous.
  if (delta >= 1.0) {
    s.a = std::numeric_limits<double>::infinity();
    s.b = support_changed ? 1.0 / (1.0 + delta) + r_ : lmin_prev_ + r_;
  } else if (support_changed) {
    s.a = 1.0 / (1.0 - delta + 1.0 / (1.0 / (1.0 - delta) + r_));
    s.b = 1.0 / (1.0 + delta) + r_;
  } else {
    const double denom = 1.0 - delta + 1.0 / (a_prev_ + r_);
    s.a = denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
    s.b = lmin_prev_ + r_;
  }
  a_prev_ = s.a;
  lmin_prev_ = support_changed
                   ? 1.0 / (1.0 + delta + 1.0 / (1.0 / (1.0 + delta) + r_))
                   : 1.0 / (1.0 + delta + 1.0 / (lmin_prev_ + r_));
  return s;
}

BoundTrace bound_trace(const SparseTrajectory& traj,
                       const std::vector<IndexSet>& est_supports,
                       const std::vector<Vector>& est_xhat,
                       const std::vector<Vector>& noise, const SensingMatrix& a,
                       double variance_ratio, std::uint64_t budget) {
  const int horizon = traj.horizon();
  if (static_cast<int>(est_supports.size()) < horizon + 1 ||
      static_cast<int>(est_xhat.size()) < horizon + 1 ||
      static_cast<int>(noise.size()) < horizon + 1)
    throw ParameterError("bound_trace: estimator history shorter than the trajectory");

  BoundTrace trace;
  const auto resize_all = [&](int len) {
    trace.a.assign(len, 0.0);
    trace.b.assign(len, 0.0);
    trace.delta.assign(len, 0.0);
    trace.theta.assign(len, 0.0);
    trace.t1.assign(len, 0.0);
    trace.beta_bound.assign(len, 0.0);
    trace.support_size.assign(len, 0);
    trace.unknown_size.assign(len, 0);
  };
  resize_all(horizon + 1);

  std::map<int, double> delta_cache;
  std::map<std::pair<int, int>, double> theta_cache;
  const auto delta_of = [&](int order) {
    if (order == 0) return 0.0;
    auto [it, fresh] = delta_cache.try_emplace(order, 0.0);
    if (fresh) it->second = rip_constant(a, order, budget).delta;
    return it->second;
  };
  const auto theta_of = [&](int s, int sp) {
    if (s == 0 || sp == 0) return 0.0;
    auto [it, fresh] = theta_cache.try_emplace(std::make_pair(s, sp), 0.0);
    if (fresh) it->second = roc_constant(a, s, sp, budget).theta;
    return it->second;
  };

  BoundRecursion rec(variance_ratio);
  for (int t = 1; t <= horizon; ++t) {
    const IndexSet& est_prev = est_supports[t - 1];            // T_t
    const IndexSet unknown = set_difference(traj.supports[t], est_prev);   // Delta_t
    const IndexSet erroneous = set_difference(est_prev, traj.supports[t]); // Delta_e,t
    const IndexSet overlap = set_intersection(est_prev, traj.supports[t]);

    const double delta = delta_of(static_cast<int>(est_prev.size()));
    const double theta = theta_of(static_cast<int>(est_prev.size()),
                                  static_cast<int>(unknown.size()));
    const bool changed = t >= 2 ? est_supports[t - 1] != est_supports[t - 2] : true;
    const auto [a_t, b_t] = rec.advance(delta, changed);

    const Vector innovation = traj.x[t] - traj.x[t - 1];
    const double err_overlap = subvector(traj.x[t - 1] - est_xhat[t - 1], overlap).norm();
    const double est_on_erroneous = subvector(est_xhat[t - 1], erroneous).norm();
    const double walk_term = std::sqrt(static_cast<double>(overlap.size())) *
                             innovation.lpNorm<Eigen::Infinity>();
    const double t1 = (err_overlap + est_on_erroneous + walk_term) / b_t;

    const Matrix at = submatrix_cols(a.entries, est_prev);
    const double noise_term = (at.transpose() * noise[t]).norm();
    const double unknown_term = theta * subvector(traj.x[t], unknown).norm();

    trace.a[t] = a_t;
    trace.b[t] = b_t;
    trace.delta[t] = delta;
    trace.theta[t] = theta;
    trace.t1[t] = t1;
    trace.beta_bound[t] = a_t * (t1 + unknown_term + noise_term);
    trace.support_size[t] = static_cast<int>(est_prev.size());
    trace.unknown_size[t] = static_cast<int>(unknown.size());
  }
  return trace;
}

int estimate_tau_kf(const TauKfScenario& scenario, double epsilon, double epsilon_err,
                    int trials, std::uint64_t seed) {
  if (trials < 1) throw ParameterError("estimate_tau_kf: trials must be >= 1");
  if (!(epsilon > 0.0) || !(epsilon < 1.0))
    throw ParameterError("estimate_tau_kf: epsilon must lie in (0, 1)");
  if (scenario.horizon < 1 || scenario.support.empty())
    throw ParameterError("estimate_tau_kf: scenario needs a horizon and a support");

  const SensingMatrix a =
      generate_gaussian_matrix(scenario.n, scenario.m, scenario.matrix_seed);
  const int horizon = scenario.horizon;

  // diff2(trial, t) for t = 1..horizon
  Matrix diff2(trials, horizon + 1);
  diff2.setZero();

#pragma omp parallel for schedule(dynamic)
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, 0x7au, static_cast<std::uint64_t>(trial)));

    Vector x = Vector::Zero(scenario.m);
    for (int i : scenario.support) x[i] = rng.normal(0.0, scenario.sigma_sys0);

    // Oracle filter starts from the exact prior; the tracked filter starts
    // from an LS-style covariance with a zero state estimate.
    GenieKfState oracle;
    oracle.support = scenario.support;
    oracle.xhat = Vector::Zero(scenario.m);
    const int k = static_cast<int>(scenario.support.size());
    oracle.p_block = scenario.sigma_sys0 * scenario.sigma_sys0 * Matrix::Identity(k, k);

    GenieKfState tracked = oracle;
    if (!scenario.identical_init) {
      const Matrix at = submatrix_cols(a.entries, scenario.support);
      const Matrix gram = at.transpose() * at;
      tracked.p_block = scenario.cfg.noise_variance *
                        gram.ldlt().solve(Matrix::Identity(k, k));
    }

    const double sigma_sys = std::sqrt(scenario.cfg.walk_variance);
    for (int t = 1; t <= horizon; ++t) {
      for (int i : scenario.support) x[i] += rng.normal(0.0, sigma_sys);
      const Vector y = measure(x, a, scenario.noise, rng);
      auto oracle_next = genie_kf_step(oracle, y, a, scenario.support, scenario.cfg);
      auto tracked_next = genie_kf_step(tracked, y, a, scenario.support, scenario.cfg);
      oracle = std::move(oracle_next.state);
      tracked = std::move(tracked_next.state);
      diff2(trial, t) = (tracked.xhat - oracle.xhat).squaredNorm();
    }
  }

  for (int delay = 0; delay < horizon; ++delay) {
    int good = 0;
    for (int trial = 0; trial < trials; ++trial) {
      bool ok = true;
      for (int t = 1 + delay; t <= horizon && ok; ++t)
        ok = diff2(trial, t) <= epsilon_err;
      good += ok;
    }
    if (static_cast<double>(good) / trials > 1.0 - epsilon) return delay;
  }
  return horizon;
}

}  // namespace kfcs
