#pragma once

#include "kfcs/dantzig.hpp"
#include "kfcs/types.hpp"

namespace kfcs {

struct AlgorithmConfig {
  double lambda = 0.0;             // Dantzig constraint radius
  double detect_threshold = 0.0;   // additions need |x_csres| strictly above this
  double delete_threshold = 0.0;   // deletions need |x| strictly below this
  double walk_variance = 1.0;      // coefficient-change variance assumed by the KF
  double noise_variance = 1.0;     // observation-noise variance assumed by the KF
  double addition_cap_factor = 1.0;  // cap additions per step at floor(gamma*n/log2(m))
  int init_measurements = 0;       // rows of the time-0 matrix (n0)
};

void validate(const AlgorithmConfig& cfg);

// Additions allowed in one detection step.
int addition_cap(const AlgorithmConfig& cfg, int n, int m);

// Recursive estimator state. P is the covariance block over the sorted
// support; xhat is a full m-vector that is zero off the support.
struct KfcsState {
  Vector xhat;
  Matrix p_block;
  IndexSet support;
  int t = 0;
};

struct LscsState {
  Vector xhat;
  IndexSet support;
  int t = 0;
};

struct StepOutput {
  Vector xhat;      // final estimate
  Vector x_csres;   // x_init + Dantzig output on the residual
  Vector x_init;    // KF (or LS) stage estimate
  Vector residual;  // y - A x_init
  IndexSet detected;  // indices that entered the support this step
  IndexSet deleted;   // indices removed by the deletion threshold
  int ill_conditioning_events = 0;
};

// One reduced-order Kalman predict+update restricted to the state's support.
// Computed in information form, M = A_T'A_T + sigma^2 P_pred^{-1}, which stays
// well posed for arbitrarily large prior variance.
struct KfPrediction {
  Vector x_init;    // m-vector, zero off the support
  Matrix p_pred;    // support block, P_{t-1} + walk_variance I
  Matrix p_upd;     // support block, M^{-1} sigma^2
  Matrix gain;      // |T| x n
  Vector residual;  // y - A x_init
  bool ill_conditioned = false;
};

KfcsState kfcs_init(const DantzigSelector& init_solver, const Vector& y0,
                    const AlgorithmConfig& cfg, double tol = kDefaultSolverTol);

KfPrediction kf_predict_update(const KfcsState& state, const Vector& y,
                               const SensingMatrix& a, const AlgorithmConfig& cfg);

std::pair<KfcsState, StepOutput> kfcs_step(const KfcsState& state, const Vector& y,
                                           const DantzigSelector& solver,
                                           const AlgorithmConfig& cfg,
                                           double tol = kDefaultSolverTol);

LscsState lscs_init(const DantzigSelector& init_solver, const Vector& y0,
                    const AlgorithmConfig& cfg, double tol = kDefaultSolverTol);

std::pair<LscsState, StepOutput> lscs_step(const LscsState& state, const Vector& y,
                                           const DantzigSelector& solver,
                                           const AlgorithmConfig& cfg,
                                           double tol = kDefaultSolverTol);

// Oracle Kalman filter that is handed the true support at every step.
struct GenieKfState {
  Vector xhat;
  Matrix p_block;
  IndexSet support;
  int t = 0;
};

GenieKfState genie_kf_init(const SensingMatrix& a0, const Vector& y0,
                           const IndexSet& true_support, const AlgorithmConfig& cfg,
                           double prior_variance);

struct GenieStepResult {
  GenieKfState state;
  Vector xhat;
  int ill_conditioning_events = 0;
};

GenieStepResult genie_kf_step(const GenieKfState& state, const Vector& y,
                              const SensingMatrix& a, const IndexSet& true_support,
                              const AlgorithmConfig& cfg);

LeastSquaresResult genie_ls_step(const SensingMatrix& a, const Vector& y,
                                 const IndexSet& true_support);

SupportEstimate simple_cs_step(const DantzigSelector& solver, const Vector& y,
                               const AlgorithmConfig& cfg,
                               double tol = kDefaultSolverTol);

}  // namespace kfcs
