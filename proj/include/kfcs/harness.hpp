#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "kfcs/estimators.hpp"
#include "kfcs/models.hpp"
#include "kfcs/sensing.hpp"

namespace kfcs {

enum class EstimatorKind { kKfcs, kLscs, kCs, kGenieKf, kGenieLs };

std::string to_string(EstimatorKind kind);
std::optional<EstimatorKind> estimator_from_string(const std::string& name);

enum class ModelKind { kRandomWalk, kNoRemovals, kBoundedPower };
enum class MatrixPolicy { kShared, kPerTrial };

struct ExperimentConfig {
  ModelKind model = ModelKind::kNoRemovals;
  RandomWalkParams walk;       // kRandomWalk / kNoRemovals
  BoundedPowerParams bounded;  // kBoundedPower
  int n = 0;                   // measurement count for t >= 1
  int n0 = 0;                  // measurement count at t = 0 (reuses A when n0 == n)
  NoiseSpec noise;
  AlgorithmConfig algo;
  std::vector<EstimatorKind> roster;
  int trials = 1;
  std::uint64_t master_seed = 1;
  std::uint64_t trial_offset = 0;  // shifts the per-trial seed streams
  MatrixPolicy matrix_policy = MatrixPolicy::kShared;
  double solver_tol = kDefaultSolverTol;
  std::string out_dir = "runs/out";
  int threads = 0;  // 0 = OpenMP default

  int signal_length() const {
    return model == ModelKind::kBoundedPower ? bounded.m : walk.m;
  }
  int horizon() const {
    return model == ModelKind::kBoundedPower ? bounded.horizon : walk.horizon;
  }
};

void validate(const ExperimentConfig& cfg);

// Per-trial raw accumulators plus their canonical-order sums. Keeping the
// trial-level terms makes pooling exact: merging two runs and re-folding
// reproduces the single 2k-trial run bit for bit.
struct TrialData {
  Matrix err2, misses, extras, diff2, divergences;  // (horizon+1) x roster
  Vector energy;                                    // (horizon+1)
};

struct RunMetrics {
  std::vector<EstimatorKind> roster;
  int trials = 0;
  int horizon = 0;
  std::vector<TrialData> per_trial;
  Matrix err2_sum;        // (horizon+1) x roster
  Vector energy_sum;      // (horizon+1)
  Matrix misses_sum;      // (horizon+1) x roster
  Matrix extras_sum;      // (horizon+1) x roster
  Matrix diff2_sum;       // (horizon+1) x roster; only the kfcs column is fed
  Matrix divergence_sum;  // (horizon+1) x roster

  // Recompute the sums by folding per_trial in index order.
  void refold();

  int slot(EstimatorKind kind) const;
  double nmse(int t, int slot) const;
  double misses(int t, int slot) const { return misses_sum(t, slot) / trials; }
  double extras(int t, int slot) const { return extras_sum(t, slot) / trials; }
  double diff2(int t, int slot) const { return diff2_sum(t, slot) / trials; }
  double divergences(int t, int slot) const { return divergence_sum(t, slot); }

  // Mean NMSE over an inclusive time window.
  double mean_nmse(int t_begin, int t_end, int slot) const;
  double total_divergences(int slot) const;
};

RunMetrics run_experiment(const ExperimentConfig& cfg);
RunMetrics merge(const RunMetrics& a, const RunMetrics& b);

// (|truth \ estimate|, |estimate \ truth|)
std::pair<int, int> support_errors(const IndexSet& truth, const IndexSet& estimate);

void emit_csv(const RunMetrics& metrics, const std::string& path);
void write_manifest(const ExperimentConfig& cfg, const std::string& path);

struct MetricsRow {
  int t = 0;
  std::string estimator;
  double nmse = 0.0, misses = 0.0, extras = 0.0, diff2 = 0.0;
  long divergences = 0;
};
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

// Flat key = value configuration file; '#' starts a comment.
ExperimentConfig load_config_file(const std::string& path);
ExperimentConfig parse_config(const std::string& text);

// One instrumented KF-CS trial, exposing the per-step internals that the
// bound diagnostics consume. Uses the same seed streams as run_experiment,
// so trial_id 0 here replays trial 0 of a shared-matrix run.
struct KfcsTrialTrace {
  SensingMatrix a;
  SparseTrajectory traj;
  std::vector<IndexSet> est_supports;  // estimated support per t
  std::vector<Vector> est_xhat;        // final estimate per t
  std::vector<Vector> x_init;          // KF-stage estimate per t (t >= 1)
  std::vector<Vector> noise;           // measurement noise per t (t >= 1)
};
KfcsTrialTrace trace_kfcs_trial(const ExperimentConfig& cfg, std::uint64_t trial_id);

}  // namespace kfcs
