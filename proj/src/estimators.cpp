#include "kfcs/estimators.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace kfcs {

namespace {

// Symmetric inverse with a conditioning probe. Eigenvalues are floored at
// lambda_max * 1e-14 when the matrix is effectively singular so a flagged
// step still produces finite output for the caller to record and survive.
Matrix guarded_inverse(const Matrix& sym, bool& flagged) {
  if (sym.rows() == 0) return sym;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const double hi = es.eigenvalues().maxCoeff();
  const double lo = es.eigenvalues().minCoeff();
  if (!(lo > 0.0) || hi > lo * kConditionLimit) flagged = true;
  const double floor_val = std::max(hi, 0.0) * 1e-14 +
                           std::numeric_limits<double>::denorm_min();
  Vector inv = es.eigenvalues();
  for (Eigen::Index k = 0; k < inv.size(); ++k)
    inv[k] = 1.0 / std::max(inv[k], floor_val);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

struct ReducedKf {
  Vector x_init_block;
  Matrix p_pred;
  Matrix p_upd;
  Matrix gain;
  bool ill_conditioned = false;
};

ReducedKf reduced_kf(const Matrix& a, const IndexSet& support,
                     const Vector& xhat_block, const Matrix& p_block,
                     const Vector& y, double walk_var, double noise_var) {
  ReducedKf out;
  const int k = static_cast<int>(support.size());
  if (k == 0) {
    out.x_init_block = Vector::Zero(0);
    return out;
  }
  const Matrix at = submatrix_cols(a, support);
  out.p_pred = p_block + walk_var * Matrix::Identity(k, k);
  const Matrix p_pred_inv = guarded_inverse(out.p_pred, out.ill_conditioned);
  const Matrix m_info = at.transpose() * at + noise_var * p_pred_inv;
  const Matrix m_inv = guarded_inverse(m_info, out.ill_conditioned);
  out.gain = m_inv * at.transpose();
  out.x_init_block = xhat_block + out.gain * (y - at * xhat_block);
  out.p_upd = m_inv * noise_var;
  return out;
}

// Candidates off the current support whose CS-residual magnitude clears the
// detection threshold, capped to the `cap` largest magnitudes (ties keep the
// lowest index).
IndexSet detect_additions(const Vector& x_csres, const IndexSet& support,
                          double threshold, int cap) {
  std::vector<std::pair<double, int>> cand;
  for (int i = 0; i < x_csres.size(); ++i) {
    if (std::abs(x_csres[i]) > threshold && !set_contains(support, i))
      cand.emplace_back(-std::abs(x_csres[i]), i);
  }
  std::sort(cand.begin(), cand.end());
  if (static_cast<int>(cand.size()) > cap) cand.resize(std::max(cap, 0));
  IndexSet out;
  out.reserve(cand.size());
  for (const auto& [neg_mag, i] : cand) out.push_back(i);
  std::sort(out.begin(), out.end());
  return out;
}

Matrix ls_covariance_block(const Matrix& a, const IndexSet& support,
                           double noise_var, bool& flagged) {
  const Matrix at = submatrix_cols(a, support);
  const Matrix gram = at.transpose() * at;
  return guarded_inverse(gram, flagged) * noise_var;
}

// Steps 2-4 shared by KF-CS and LS-CS: Dantzig on the residual, detection
// with the addition cap, LS on the grown support, thresholded deletion, and
// the final LS when the support changed.
struct CsResidualOutcome {
  Vector xhat;
  IndexSet new_support;
  StepOutput output;
  bool support_changed = false;
};

CsResidualOutcome cs_residual_stage(const Vector& x_init, const Vector& residual,
                                    const IndexSet& support, const Vector& y,
                                    const DantzigSelector& solver,
                                    const AlgorithmConfig& cfg, double tol,
                                    int events_so_far) {
  const SensingMatrix& a = solver.matrix();
  CsResidualOutcome r;
  r.output.x_init = x_init;
  r.output.residual = residual;
  r.output.ill_conditioning_events = events_so_far;

  const LpSolution beta = solver.solve(residual, cfg.lambda, tol);
  if (beta.status != LpStatus::kOptimal)
    throw NumericalError("cs-residual Dantzig solve did not reach optimality");
  r.output.x_csres = x_init + beta.zeta;

  const int cap = addition_cap(cfg, a.rows(), a.cols());
  const IndexSet additions =
      detect_additions(r.output.x_csres, support, cfg.detect_threshold, cap);
  IndexSet grown = set_union(support, additions);

  Vector x_det;
  if (grown == support) {
    x_det = x_init;
  } else {
    // Rank repair drops the weakest new candidates first; members of the
    // carried-over support are shielded by a large priority offset.
    Vector priority = r.output.x_csres.cwiseAbs();
    for (int i : support) priority[i] += 1e30;
    const LeastSquaresResult det_ls =
        least_squares_on_support(a.entries, y, grown, &priority);
    if (det_ls.ill_conditioned) ++r.output.ill_conditioning_events;
    grown = det_ls.support;
    x_det = det_ls.xhat;
  }

  IndexSet deletions;
  for (int i : grown)
    if (std::abs(x_det[i]) < cfg.delete_threshold) deletions.push_back(i);
  IndexSet final_support = set_difference(grown, deletions);

  r.output.detected = set_difference(grown, support);
  r.output.deleted = deletions;

  if (final_support == support) {
    r.xhat = x_init;
    r.new_support = support;
    r.support_changed = false;
  } else {
    const Vector priority = x_det.cwiseAbs();
    const LeastSquaresResult final_ls =
        least_squares_on_support(a.entries, y, final_support, &priority);
    if (final_ls.ill_conditioned) ++r.output.ill_conditioning_events;
    r.xhat = final_ls.xhat;
    r.new_support = final_ls.support;
    r.support_changed = true;
  }
  r.output.xhat = r.xhat;
  return r;
}

}  // namespace

void validate(const AlgorithmConfig& cfg) {
  if (!(cfg.lambda > 0.0)) throw ParameterError("lambda must be positive");
  if (cfg.detect_threshold < 0.0 || cfg.delete_threshold < 0.0)
    throw ParameterError("thresholds must be nonnegative");
  if (!(cfg.walk_variance > 0.0)) throw ParameterError("walk variance must be positive");
  if (!(cfg.noise_variance > 0.0)) throw ParameterError("noise variance must be positive");
  if (!(cfg.addition_cap_factor > 0.0))
    throw ParameterError("addition cap factor must be positive");
}

int addition_cap(const AlgorithmConfig& cfg, int n, int m) {
  if (m < 2) return n;
  return static_cast<int>(std::floor(cfg.addition_cap_factor * n / std::log2(m)));
}

KfcsState kfcs_init(const DantzigSelector& init_solver, const Vector& y0,
                    const AlgorithmConfig& cfg, double tol) {
  validate(cfg);
  const SupportEstimate est =
      gauss_dantzig(init_solver, y0, cfg.lambda, cfg.detect_threshold, tol);
  KfcsState state;
  state.support = est.support;
  state.xhat = est.xhat;
  state.t = 0;
  bool flagged = false;
  state.p_block = state.support.empty()
                      ? Matrix()
                      : ls_covariance_block(init_solver.matrix().entries, state.support,
                                            cfg.noise_variance, flagged);
  return state;
}

KfPrediction kf_predict_update(const KfcsState& state, const Vector& y,
                               const SensingMatrix& a, const AlgorithmConfig& cfg) {
  if (y.size() != a.rows()) throw ParameterError("kf_predict_update: dimension mismatch");
  const ReducedKf kf = reduced_kf(a.entries, state.support, subvector(state.xhat, state.support),
                                  state.p_block, y, cfg.walk_variance, cfg.noise_variance);
  KfPrediction pred;
  pred.x_init = scatter(kf.x_init_block, state.support, a.cols());
  pred.p_pred = kf.p_pred;
  pred.p_upd = kf.p_upd;
  pred.gain = kf.gain;
  pred.residual = y - a.entries * pred.x_init;
  pred.ill_conditioned = kf.ill_conditioned;
  return pred;
}

std::pair<KfcsState, StepOutput> kfcs_step(const KfcsState& state, const Vector& y,
                                           const DantzigSelector& solver,
                                           const AlgorithmConfig& cfg, double tol) {
  const SensingMatrix& a = solver.matrix();
  const KfPrediction pred = kf_predict_update(state, y, a, cfg);

  const CsResidualOutcome r =
      cs_residual_stage(pred.x_init, pred.residual, state.support, y, solver, cfg, tol,
                        pred.ill_conditioned ? 1 : 0);

  KfcsState next;
  next.t = state.t + 1;
  next.xhat = r.xhat;
  next.support = r.new_support;
  StepOutput out = r.output;
  if (!r.support_changed) {
    next.p_block = pred.p_upd;
  } else {
    bool flagged = false;
    next.p_block = next.support.empty()
                       ? Matrix()
                       : ls_covariance_block(a.entries, next.support, cfg.noise_variance,
                                             flagged);
    if (flagged) ++out.ill_conditioning_events;
  }
  return {std::move(next), std::move(out)};
}

LscsState lscs_init(const DantzigSelector& init_solver, const Vector& y0,
                    const AlgorithmConfig& cfg, double tol) {
  validate(cfg);
  const SupportEstimate est =
      gauss_dantzig(init_solver, y0, cfg.lambda, cfg.detect_threshold, tol);
  return LscsState{est.xhat, est.support, 0};
}

std::pair<LscsState, StepOutput> lscs_step(const LscsState& state, const Vector& y,
                                           const DantzigSelector& solver,
                                           const AlgorithmConfig& cfg, double tol) {
  const SensingMatrix& a = solver.matrix();
  int events = 0;
  Vector x_init;
  if (state.support.empty()) {
    x_init = Vector::Zero(a.cols());
  } else {
    const Vector priority = state.xhat.cwiseAbs();
    const LeastSquaresResult init_ls =
        least_squares_on_support(a.entries, y, state.support, &priority);
    if (init_ls.ill_conditioned) ++events;
    x_init = init_ls.xhat;
  }
  const Vector residual = y - a.entries * x_init;

  const CsResidualOutcome r =
      cs_residual_stage(x_init, residual, state.support, y, solver, cfg, tol, events);
  return {LscsState{r.xhat, r.new_support, state.t + 1}, r.output};
}

GenieKfState genie_kf_init(const SensingMatrix& a0, const Vector& y0,
                           const IndexSet& true_support, const AlgorithmConfig& cfg,
                           double prior_variance) {
  GenieKfState state;
  state.support = true_support;
  state.t = 0;
  const int k = static_cast<int>(true_support.size());
  if (k == 0 || prior_variance <= 0.0) {
    state.xhat = Vector::Zero(a0.cols());
    state.p_block = Matrix::Zero(k, k);
    return state;
  }
  bool flagged = false;
  const Matrix at = submatrix_cols(a0.entries, true_support);
  const Matrix m_info = at.transpose() * at +
                        (cfg.noise_variance / prior_variance) * Matrix::Identity(k, k);
  const Matrix m_inv = guarded_inverse(m_info, flagged);
  state.xhat = scatter(m_inv * (at.transpose() * y0), true_support, a0.cols());
  state.p_block = m_inv * cfg.noise_variance;
  return state;
}

GenieStepResult genie_kf_step(const GenieKfState& state, const Vector& y,
                              const SensingMatrix& a, const IndexSet& true_support,
                              const AlgorithmConfig& cfg) {
  // Carry surviving entries of P across the support change; fresh indices
  // start at zero state with zero covariance and pick up the walk variance
  // in the predict step.
  const int k = static_cast<int>(true_support.size());
  Matrix p = Matrix::Zero(k, k);
  Vector xhat_block = Vector::Zero(k);
  std::vector<int> old_pos(k, -1);
  for (int i = 0; i < k; ++i) {
    const auto it = std::lower_bound(state.support.begin(), state.support.end(),
                                     true_support[i]);
    if (it != state.support.end() && *it == true_support[i])
      old_pos[i] = static_cast<int>(it - state.support.begin());
  }
  for (int i = 0; i < k; ++i) {
    if (old_pos[i] < 0) continue;
    xhat_block[i] = state.xhat[true_support[i]];
    for (int j = 0; j < k; ++j)
      if (old_pos[j] >= 0) p(i, j) = state.p_block(old_pos[i], old_pos[j]);
  }

  const ReducedKf kf = reduced_kf(a.entries, true_support, xhat_block, p, y,
                                  cfg.walk_variance, cfg.noise_variance);
  GenieStepResult res;
  res.state.support = true_support;
  res.state.t = state.t + 1;
  res.state.xhat = scatter(kf.x_init_block, true_support, a.cols());
  res.state.p_block = kf.p_upd;
  res.xhat = res.state.xhat;
  res.ill_conditioning_events = kf.ill_conditioned ? 1 : 0;
  return res;
}

LeastSquaresResult genie_ls_step(const SensingMatrix& a, const Vector& y,
                                 const IndexSet& true_support) {
  return least_squares_on_support(a.entries, y, true_support);
}

SupportEstimate simple_cs_step(const DantzigSelector& solver, const Vector& y,
                               const AlgorithmConfig& cfg, double tol) {
  return gauss_dantzig(solver, y, cfg.lambda, cfg.detect_threshold, tol);
}

}  // namespace kfcs
