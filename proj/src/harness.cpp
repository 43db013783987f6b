#include "kfcs/harness.hpp"

#include <omp.h>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "kfcs/rng.hpp"

namespace kfcs {

namespace {

constexpr std::uint64_t kMatrixStream = 0x41;
constexpr std::uint64_t kInitMatrixStream = 0x42;
constexpr std::uint64_t kTrajectoryStream = 0x54;
constexpr std::uint64_t kNoiseStream = 0x4e;

TrialData empty_trial_data(int horizon, int slots) {
  TrialData d;
  d.err2 = Matrix::Zero(horizon + 1, slots);
  d.misses = Matrix::Zero(horizon + 1, slots);
  d.extras = Matrix::Zero(horizon + 1, slots);
  d.diff2 = Matrix::Zero(horizon + 1, slots);
  d.divergences = Matrix::Zero(horizon + 1, slots);
  d.energy = Vector::Zero(horizon + 1);
  return d;
}

SparseTrajectory make_trajectory(const ExperimentConfig& cfg, std::uint64_t seed) {
  switch (cfg.model) {
    case ModelKind::kRandomWalk: return simulate_random_walk(cfg.walk, seed);
    case ModelKind::kNoRemovals: return simulate_no_removals(cfg.walk, seed);
    case ModelKind::kBoundedPower: return simulate_bounded_power(cfg.bounded, seed);
  }
  throw ParameterError("unknown model kind");
}

double genie_prior_variance(const ExperimentConfig& cfg) {
  if (cfg.model == ModelKind::kBoundedPower)
    return cfg.bounded.plateau * cfg.bounded.plateau;
  return cfg.walk.sigma_sys0 * cfg.walk.sigma_sys0;
}

// Per-estimator live state inside one trial.
struct EstimatorSlot {
  EstimatorKind kind;
  std::optional<KfcsState> kfcs;
  std::optional<LscsState> lscs;
  std::optional<GenieKfState> genie;
  Vector estimate;
  IndexSet support;
  int events = 0;  // events recorded for the current step
};

void sanitize_if_bad(EstimatorSlot& slot, int m) {
  if (slot.estimate.size() == m && slot.estimate.allFinite()) return;
  ++slot.events;
  slot.estimate = Vector::Zero(m);
  slot.support = {};
  if (slot.kfcs) *slot.kfcs = KfcsState{Vector::Zero(m), Matrix(), {}, slot.kfcs->t};
  if (slot.lscs) *slot.lscs = LscsState{Vector::Zero(m), {}, slot.lscs->t};
}

TrialData run_trial(const ExperimentConfig& cfg, const SensingMatrix& a,
                    const DantzigSelector& sel, const SensingMatrix& a0,
                    const DantzigSelector& sel0, std::uint64_t trial_id) {
  const int horizon = cfg.horizon();
  const int m = cfg.signal_length();
  const int slots = static_cast<int>(cfg.roster.size());
  TrialData acc = empty_trial_data(horizon, slots);

  const SparseTrajectory traj =
      make_trajectory(cfg, derive_seed(cfg.master_seed, kTrajectoryStream, trial_id));
  Rng noise_rng(derive_seed(cfg.master_seed, kNoiseStream, trial_id));
  const Vector y0 = measure(traj.x[0], a0, cfg.noise, noise_rng);

  std::vector<EstimatorSlot> live(slots);
  int kfcs_slot = -1, genie_slot = -1;

  for (int k = 0; k < slots; ++k) {
    EstimatorSlot& slot = live[k];
    slot.kind = cfg.roster[k];
    slot.estimate = Vector::Zero(m);
    try {
      switch (slot.kind) {
        case EstimatorKind::kKfcs: {
          kfcs_slot = k;
          slot.kfcs = kfcs_init(sel0, y0, cfg.algo, cfg.solver_tol);
          slot.estimate = slot.kfcs->xhat;
          slot.support = slot.kfcs->support;
          break;
        }
        case EstimatorKind::kLscs: {
          slot.lscs = lscs_init(sel0, y0, cfg.algo, cfg.solver_tol);
          slot.estimate = slot.lscs->xhat;
          slot.support = slot.lscs->support;
          break;
        }
        case EstimatorKind::kCs: {
          const SupportEstimate est =
              simple_cs_step(sel0, y0, cfg.algo, cfg.solver_tol);
          slot.estimate = est.xhat;
          slot.support = est.support;
          slot.events += est.ill_conditioned ? 1 : 0;
          break;
        }
        case EstimatorKind::kGenieKf: {
          genie_slot = k;
          slot.genie = genie_kf_init(a0, y0, traj.supports[0], cfg.algo,
                                     genie_prior_variance(cfg));
          slot.estimate = slot.genie->xhat;
          slot.support = traj.supports[0];
          break;
        }
        case EstimatorKind::kGenieLs: {
          const LeastSquaresResult ls = genie_ls_step(a0, y0, traj.supports[0]);
          slot.estimate = ls.xhat;
          slot.support = traj.supports[0];
          slot.events += ls.ill_conditioned ? 1 : 0;
          break;
        }
      }
    } catch (const NumericalError&) {
      ++slot.events;
      if (slot.kind == EstimatorKind::kKfcs)
        slot.kfcs = KfcsState{Vector::Zero(m), Matrix(), {}, 0};
      if (slot.kind == EstimatorKind::kLscs) slot.lscs = LscsState{Vector::Zero(m), {}, 0};
    }
    sanitize_if_bad(slot, m);
  }

  const auto record = [&](int t) {
    acc.energy[t] = traj.x[t].squaredNorm();
    for (int k = 0; k < slots; ++k) {
      const double err2 = (traj.x[t] - live[k].estimate).squaredNorm();
      acc.err2(t, k) = err2;
      const auto [miss, extra] = support_errors(traj.supports[t], live[k].support);
      acc.misses(t, k) = miss;
      acc.extras(t, k) = extra;
      // Divergence column: numerical breakdowns plus steps whose error
      // energy exceeds the signal energy (worse than the zero estimate).
      acc.divergences(t, k) = live[k].events + (err2 > acc.energy[t] ? 1 : 0);
      live[k].events = 0;
    }
    if (kfcs_slot >= 0 && genie_slot >= 0)
      acc.diff2(t, kfcs_slot) =
          (live[kfcs_slot].estimate - live[genie_slot].estimate).squaredNorm();
  };
  record(0);

  for (int t = 1; t <= horizon; ++t) {
    const Vector y = measure(traj.x[t], a, cfg.noise, noise_rng);
    for (int k = 0; k < slots; ++k) {
      EstimatorSlot& slot = live[k];
      try {
        switch (slot.kind) {
          case EstimatorKind::kKfcs: {
            auto [next, out] = kfcs_step(*slot.kfcs, y, sel, cfg.algo, cfg.solver_tol);
            slot.kfcs = std::move(next);
            slot.estimate = out.xhat;
            slot.support = slot.kfcs->support;
            slot.events += out.ill_conditioning_events;
            break;
          }
          case EstimatorKind::kLscs: {
            auto [next, out] = lscs_step(*slot.lscs, y, sel, cfg.algo, cfg.solver_tol);
            slot.lscs = std::move(next);
            slot.estimate = out.xhat;
            slot.support = slot.lscs->support;
            slot.events += out.ill_conditioning_events;
            break;
          }
          case EstimatorKind::kCs: {
            const SupportEstimate est = simple_cs_step(sel, y, cfg.algo, cfg.solver_tol);
            slot.estimate = est.xhat;
            slot.support = est.support;
            slot.events += est.ill_conditioned ? 1 : 0;
            break;
          }
          case EstimatorKind::kGenieKf: {
            GenieStepResult res =
                genie_kf_step(*slot.genie, y, a, traj.supports[t], cfg.algo);
            slot.genie = std::move(res.state);
            slot.estimate = res.xhat;
            slot.support = traj.supports[t];
            slot.events += res.ill_conditioning_events;
            break;
          }
          case EstimatorKind::kGenieLs: {
            const LeastSquaresResult ls = genie_ls_step(a, y, traj.supports[t]);
            slot.estimate = ls.xhat;
            slot.support = traj.supports[t];
            slot.events += ls.ill_conditioned ? 1 : 0;
            break;
          }
        }
      } catch (const NumericalError&) {
        // Record the breakdown and keep the previous estimate; the trial
        // carries on with the next observation.
        ++slot.events;
      }
      sanitize_if_bad(slot, m);
    }
    record(t);
  }
  return acc;
}

std::string format_sig10(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kKfcs: return "kfcs";
    case EstimatorKind::kLscs: return "lscs";
    case EstimatorKind::kCs: return "cs";
    case EstimatorKind::kGenieKf: return "genie_kf";
    case EstimatorKind::kGenieLs: return "genie_ls";
  }
  return "?";
}

std::optional<EstimatorKind> estimator_from_string(const std::string& name) {
  if (name == "kfcs") return EstimatorKind::kKfcs;
  if (name == "lscs") return EstimatorKind::kLscs;
  if (name == "cs") return EstimatorKind::kCs;
  if (name == "genie_kf") return EstimatorKind::kGenieKf;
  if (name == "genie_ls") return EstimatorKind::kGenieLs;
  return std::nullopt;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw ParameterError("trials must be >= 1");
  if (cfg.horizon() < 2) throw ParameterError("horizon must be >= 2");
  if (cfg.roster.empty()) throw ParameterError("estimator roster must be nonempty");
  for (std::size_t i = 0; i < cfg.roster.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.roster.size(); ++j)
      if (cfg.roster[i] == cfg.roster[j])
        throw ParameterError("estimator roster has duplicates");
  if (cfg.n < 1 || cfg.n0 < 1) throw ParameterError("n and n0 must be >= 1");
  if (!(cfg.solver_tol > 0.0)) throw ParameterError("solver tolerance must be positive");
  validate(cfg.algo);
}

int RunMetrics::slot(EstimatorKind kind) const {
  for (std::size_t k = 0; k < roster.size(); ++k)
    if (roster[k] == kind) return static_cast<int>(k);
  throw ParameterError("estimator " + to_string(kind) + " not in this run");
}

double RunMetrics::nmse(int t, int s) const {
  const double energy = energy_sum[t];
  return energy > 0.0 ? err2_sum(t, s) / energy : 0.0;
}

double RunMetrics::mean_nmse(int t_begin, int t_end, int s) const {
  double total = 0.0;
  int count = 0;
  for (int t = t_begin; t <= t_end; ++t, ++count) total += nmse(t, s);
  return count > 0 ? total / count : 0.0;
}

double RunMetrics::total_divergences(int s) const {
  return divergence_sum.col(s).sum();
}

RunMetrics run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const int horizon = cfg.horizon();
  const int m = cfg.signal_length();
  const int slots = static_cast<int>(cfg.roster.size());
  const bool shared = cfg.matrix_policy == MatrixPolicy::kShared;

  std::optional<SensingMatrix> shared_a, shared_a0;
  std::optional<DantzigSelector> shared_sel, shared_sel0;
  if (shared) {
    shared_a = generate_gaussian_matrix(cfg.n, m, derive_seed(cfg.master_seed, kMatrixStream, 0));
    shared_sel.emplace(*shared_a);
    if (cfg.n0 == cfg.n) {
      shared_a0 = shared_a;
      shared_sel0.emplace(*shared_a0);
    } else {
      shared_a0 = generate_gaussian_matrix(cfg.n0, m,
                                           derive_seed(cfg.master_seed, kInitMatrixStream, 0));
      shared_sel0.emplace(*shared_a0);
    }
  }

  std::vector<TrialData> results(cfg.trials);
  std::string failure;

  const int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int trial = 0; trial < cfg.trials; ++trial) {
    try {
      const std::uint64_t trial_id = cfg.trial_offset + static_cast<std::uint64_t>(trial);
      if (shared) {
        results[trial] = run_trial(cfg, *shared_a, *shared_sel, *shared_a0,
                                   *shared_sel0, trial_id);
      } else {
        const SensingMatrix a = generate_gaussian_matrix(
            cfg.n, m, derive_seed(cfg.master_seed, kMatrixStream, trial_id + 1));
        const DantzigSelector sel(a);
        if (cfg.n0 == cfg.n) {
          results[trial] = run_trial(cfg, a, sel, a, sel, trial_id);
        } else {
          const SensingMatrix a0 = generate_gaussian_matrix(
              cfg.n0, m, derive_seed(cfg.master_seed, kInitMatrixStream, trial_id + 1));
          const DantzigSelector sel0(a0);
          results[trial] = run_trial(cfg, a, sel, a0, sel0, trial_id);
        }
      }
    } catch (const std::exception& e) {
#pragma omp critical
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw std::runtime_error("trial failed: " + failure);

  RunMetrics metrics;
  metrics.roster = cfg.roster;
  metrics.trials = cfg.trials;
  metrics.horizon = horizon;
  metrics.per_trial = std::move(results);
  metrics.refold();
  return metrics;
}

void RunMetrics::refold() {
  const int slots = static_cast<int>(roster.size());
  err2_sum = Matrix::Zero(horizon + 1, slots);
  misses_sum = Matrix::Zero(horizon + 1, slots);
  extras_sum = Matrix::Zero(horizon + 1, slots);
  diff2_sum = Matrix::Zero(horizon + 1, slots);
  divergence_sum = Matrix::Zero(horizon + 1, slots);
  energy_sum = Vector::Zero(horizon + 1);
  // Fixed fold order keeps the output independent of thread scheduling and
  // makes pooled runs reproduce a single larger run exactly.
  for (const TrialData& r : per_trial) {
    err2_sum += r.err2;
    misses_sum += r.misses;
    extras_sum += r.extras;
    diff2_sum += r.diff2;
    divergence_sum += r.divergences;
    energy_sum += r.energy;
  }
  trials = static_cast<int>(per_trial.size());
}

RunMetrics merge(const RunMetrics& a, const RunMetrics& b) {
  if (a.roster != b.roster || a.horizon != b.horizon)
    throw ParameterError("merge: runs are not compatible");
  RunMetrics out = a;
  out.per_trial.insert(out.per_trial.end(), b.per_trial.begin(), b.per_trial.end());
  out.refold();
  return out;
}

std::pair<int, int> support_errors(const IndexSet& truth, const IndexSet& estimate) {
  return {static_cast<int>(set_difference(truth, estimate).size()),
          static_cast<int>(set_difference(estimate, truth).size())};
}

void emit_csv(const RunMetrics& metrics, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "t,estimator,nmse,misses,extras,diff2,divergences\n";
  for (int t = 0; t <= metrics.horizon; ++t) {
    for (std::size_t k = 0; k < metrics.roster.size(); ++k) {
      const int s = static_cast<int>(k);
      out << t << ',' << to_string(metrics.roster[k]) << ','
          << format_sig10(metrics.nmse(t, s)) << ',' << format_sig10(metrics.misses(t, s))
          << ',' << format_sig10(metrics.extras(t, s)) << ','
          << format_sig10(metrics.diff2(t, s)) << ','
          << static_cast<long>(metrics.divergences(t, s)) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<MetricsRow> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    MetricsRow row;
    std::string tok;
    std::getline(ss, tok, ',');
    row.t = std::stoi(tok);
    std::getline(ss, row.estimator, ',');
    std::getline(ss, tok, ',');
    row.nmse = std::stod(tok);
    std::getline(ss, tok, ',');
    row.misses = std::stod(tok);
    std::getline(ss, tok, ',');
    row.extras = std::stod(tok);
    std::getline(ss, tok, ',');
    row.diff2 = std::stod(tok);
    std::getline(ss, tok, ',');
    row.divergences = std::stol(tok);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_manifest(const ExperimentConfig& cfg, const std::string& path) {
  nlohmann::json j;
  j["model"] = cfg.model == ModelKind::kRandomWalk     ? "random_walk"
               : cfg.model == ModelKind::kNoRemovals   ? "no_removals"
                                                       : "bounded_power";
  j["m"] = cfg.signal_length();
  j["n"] = cfg.n;
  j["n0"] = cfg.n0;
  j["horizon"] = cfg.horizon();
  if (cfg.model == ModelKind::kBoundedPower) {
    j["s0"] = cfg.bounded.initial_size;
    j["sa"] = cfg.bounded.swap_size;
    j["d"] = cfg.bounded.spacing;
    j["ramp_rate"] = cfg.bounded.ramp_rate;
    j["plateau"] = cfg.bounded.plateau;
    j["ramp_down"] = cfg.bounded.ramp_down;
  } else {
    j["s0"] = cfg.walk.initial_size;
    j["sa"] = cfg.walk.additions;
    j["sr"] = cfg.walk.removals;
    j["d"] = cfg.walk.spacing;
    j["smax"] = cfg.walk.max_size;
    j["sigma_sys0"] = cfg.walk.sigma_sys0;
    j["sigma_sys"] = cfg.walk.sigma_sys;
  }
  j["noise"] = cfg.noise.kind == NoiseSpec::Kind::kGaussian ? "gaussian" : "uniform";
  j["noise_scale"] = cfg.noise.scale;
  j["lambda"] = cfg.algo.lambda;
  j["alpha"] = cfg.algo.detect_threshold;
  j["alpha_del"] = cfg.algo.delete_threshold;
  j["est_sigma_sys2"] = cfg.algo.walk_variance;
  j["est_sigma2"] = cfg.algo.noise_variance;
  j["gamma"] = cfg.algo.addition_cap_factor;
  std::vector<std::string> roster;
  for (EstimatorKind kind : cfg.roster) roster.push_back(to_string(kind));
  j["estimators"] = roster;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.master_seed;
  j["seed_offset"] = cfg.trial_offset;
  j["matrix_policy"] =
      cfg.matrix_policy == MatrixPolicy::kShared ? "shared" : "per_trial";
  j["solver_tol"] = cfg.solver_tol;
  j["out"] = cfg.out_dir;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

class KeyValues {
 public:
  explicit KeyValues(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const std::string stripped = trim(line);
      if (stripped.empty()) continue;
      const auto eq = stripped.find('=');
      if (eq == std::string::npos)
        throw ParameterError("config line " + std::to_string(lineno) +
                             ": expected key = value");
      const std::string key = trim(stripped.substr(0, eq));
      const std::string value = trim(stripped.substr(eq + 1));
      if (key.empty() || value.empty())
        throw ParameterError("config line " + std::to_string(lineno) +
                             ": empty key or value");
      if (!values_.emplace(key, value).second)
        throw ParameterError("config: duplicate key '" + key + "'");
    }
  }

  std::string str(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ParameterError("config: missing key '" + key + "'");
    used_.insert(key);
    return it->second;
  }
  std::string str_or(const std::string& key, const std::string& fallback) {
    return values_.count(key) ? str(key) : fallback;
  }
  long integer(const std::string& key) {
    try {
      return std::stol(str(key));
    } catch (const std::logic_error&) {
      throw ParameterError("config: key '" + key + "' is not an integer");
    }
  }
  long integer_or(const std::string& key, long fallback) {
    return values_.count(key) ? integer(key) : fallback;
  }
  double real(const std::string& key) {
    try {
      return std::stod(str(key));
    } catch (const std::logic_error&) {
      throw ParameterError("config: key '" + key + "' is not a number");
    }
  }
  double real_or(const std::string& key, double fallback) {
    return values_.count(key) ? real(key) : fallback;
  }
  void reject_unknown() const {
    for (const auto& [key, value] : values_) {
      if (!used_.count(key))
        throw ParameterError("config: unknown key '" + key + "'");
    }
  }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  KeyValues kv(text);
  ExperimentConfig cfg;

  const std::string model = kv.str("model");
  if (model == "random_walk") cfg.model = ModelKind::kRandomWalk;
  else if (model == "no_removals") cfg.model = ModelKind::kNoRemovals;
  else if (model == "bounded_power") cfg.model = ModelKind::kBoundedPower;
  else throw ParameterError("config: unknown model '" + model + "'");

  const int m = static_cast<int>(kv.integer("m"));
  const int horizon = static_cast<int>(kv.integer("horizon"));
  if (cfg.model == ModelKind::kBoundedPower) {
    cfg.bounded.m = m;
    cfg.bounded.horizon = horizon;
    cfg.bounded.initial_size = static_cast<int>(kv.integer("s0"));
    cfg.bounded.swap_size = static_cast<int>(kv.integer("sa"));
    cfg.bounded.spacing = static_cast<int>(kv.integer("d"));
    cfg.bounded.ramp_rate = kv.real("ramp_rate");
    cfg.bounded.plateau = kv.real("plateau");
    cfg.bounded.ramp_down = static_cast<int>(kv.integer("ramp_down"));
  } else {
    cfg.walk.m = m;
    cfg.walk.horizon = horizon;
    cfg.walk.initial_size = static_cast<int>(kv.integer("s0"));
    cfg.walk.additions = static_cast<int>(kv.integer("sa"));
    cfg.walk.removals = static_cast<int>(kv.integer_or("sr", 0));
    cfg.walk.spacing = static_cast<int>(kv.integer("d"));
    cfg.walk.max_size = static_cast<int>(kv.integer("smax"));
    cfg.walk.sigma_sys0 = kv.real("sigma_sys0");
    cfg.walk.sigma_sys = kv.real("sigma_sys");
    if (cfg.model == ModelKind::kNoRemovals && cfg.walk.removals != 0)
      throw ParameterError("config: model no_removals requires sr = 0");
  }

  cfg.n = static_cast<int>(kv.integer("n"));
  cfg.n0 = static_cast<int>(kv.integer_or("n0", cfg.n));

  const std::string noise = kv.str("noise");
  if (noise == "gaussian") cfg.noise.kind = NoiseSpec::Kind::kGaussian;
  else if (noise == "uniform") cfg.noise.kind = NoiseSpec::Kind::kUniform;
  else throw ParameterError("config: unknown noise kind '" + noise + "'");
  cfg.noise.scale = kv.real("noise_scale");

  cfg.algo.lambda = kv.real("lambda");
  cfg.algo.detect_threshold = kv.real("alpha");
  cfg.algo.delete_threshold = kv.real("alpha_del");
  cfg.algo.walk_variance = kv.real("est_sigma_sys2");
  cfg.algo.noise_variance = kv.real("est_sigma2");
  cfg.algo.addition_cap_factor = kv.real("gamma");
  cfg.algo.init_measurements = cfg.n0;

  std::istringstream roster_in(kv.str("estimators"));
  std::string name;
  while (std::getline(roster_in, name, ',')) {
    const std::string trimmed = trim(name);
    const auto kind = estimator_from_string(trimmed);
    if (!kind) throw ParameterError("config: unknown estimator '" + trimmed + "'");
    cfg.roster.push_back(*kind);
  }

  cfg.trials = static_cast<int>(kv.integer("trials"));
  cfg.master_seed = static_cast<std::uint64_t>(kv.integer("seed"));
  cfg.trial_offset = static_cast<std::uint64_t>(kv.integer_or("seed_offset", 0));
  const std::string policy = kv.str_or("matrix_policy", "shared");
  if (policy == "shared") cfg.matrix_policy = MatrixPolicy::kShared;
  else if (policy == "per_trial") cfg.matrix_policy = MatrixPolicy::kPerTrial;
  else throw ParameterError("config: unknown matrix_policy '" + policy + "'");
  cfg.solver_tol = kv.real_or("solver_tol", kDefaultSolverTol);
  cfg.out_dir = kv.str_or("out", "runs/out");
  cfg.threads = static_cast<int>(kv.integer_or("threads", 0));

  kv.reject_unknown();
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

KfcsTrialTrace trace_kfcs_trial(const ExperimentConfig& cfg, std::uint64_t trial_id) {
  validate(cfg);
  const int horizon = cfg.horizon();
  const int m = cfg.signal_length();

  KfcsTrialTrace trace;
  trace.a = generate_gaussian_matrix(cfg.n, m, derive_seed(cfg.master_seed, kMatrixStream, 0));
  const SensingMatrix a0 =
      cfg.n0 == cfg.n
          ? trace.a
          : generate_gaussian_matrix(cfg.n0, m,
                                     derive_seed(cfg.master_seed, kInitMatrixStream, 0));
  const DantzigSelector sel(trace.a);
  const DantzigSelector sel0(a0);

  trace.traj =
      make_trajectory(cfg, derive_seed(cfg.master_seed, kTrajectoryStream, trial_id));
  Rng noise_rng(derive_seed(cfg.master_seed, kNoiseStream, trial_id));

  const Vector y0 = measure(trace.traj.x[0], a0, cfg.noise, noise_rng);

  trace.est_supports.resize(horizon + 1);
  trace.est_xhat.resize(horizon + 1);
  trace.x_init.assign(horizon + 1, Vector::Zero(m));
  trace.noise.assign(horizon + 1, Vector::Zero(cfg.n));

  KfcsState state = kfcs_init(sel0, y0, cfg.algo, cfg.solver_tol);
  trace.est_supports[0] = state.support;
  trace.est_xhat[0] = state.xhat;

  for (int t = 1; t <= horizon; ++t) {
    const Vector y = measure(trace.traj.x[t], trace.a, cfg.noise, noise_rng);
    trace.noise[t] = y - trace.a.entries * trace.traj.x[t];
    auto [next, out] = kfcs_step(state, y, sel, cfg.algo, cfg.solver_tol);
    state = std::move(next);
    trace.est_supports[t] = state.support;
    trace.est_xhat[t] = state.xhat;
    trace.x_init[t] = out.x_init;
  }
  return trace;
}

}  // namespace kfcs
