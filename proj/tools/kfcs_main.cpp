#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "kfcs/harness.hpp"
#include "kfcs/sensing.hpp"
#include "kfcs/stability.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;

int run_simulate(const std::string& config_path, int trials_override,
                 long seed_override, const std::string& out_override) {
  kfcs::ExperimentConfig cfg = kfcs::load_config_file(config_path);
  if (trials_override > 0) cfg.trials = trials_override;
  if (seed_override >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed_override);
  if (!out_override.empty()) cfg.out_dir = out_override;
  kfcs::validate(cfg);

  const kfcs::RunMetrics metrics = kfcs::run_experiment(cfg);

  std::filesystem::create_directories(cfg.out_dir);
  const std::string csv_path = cfg.out_dir + "/metrics.csv";
  const std::string manifest_path = cfg.out_dir + "/manifest.json";
  kfcs::emit_csv(metrics, csv_path);
  kfcs::write_manifest(cfg, manifest_path);
  std::cout << csv_path << '\n' << manifest_path << '\n';
  return kExitOk;
}

int run_rip(int n, int m, long seed, int order, int order2, std::uint64_t budget) {
  const kfcs::SensingMatrix a =
      kfcs::generate_gaussian_matrix(n, m, static_cast<std::uint64_t>(seed));
  std::printf("%.12g\n", kfcs::rip_constant(a, order, budget).delta);
  if (order2 > 0)
    std::printf("%.12g\n", kfcs::roc_constant(a, order, order2, budget).theta);
  return kExitOk;
}

int run_tau_det(double eps, int s, double bstar_value, double sigma_sys2) {
  std::printf("%d\n", kfcs::detection_delay(eps, s, bstar_value, sigma_sys2));
  return kExitOk;
}

int run_bounds(const std::string& config_path, const std::string& out_path,
               std::uint64_t budget) {
  const kfcs::ExperimentConfig cfg = kfcs::load_config_file(config_path);
  const kfcs::KfcsTrialTrace trace = kfcs::trace_kfcs_trial(cfg, 0);
  const double ratio = cfg.algo.walk_variance / cfg.algo.noise_variance;
  const kfcs::BoundTrace bounds =
      kfcs::bound_trace(trace.traj, trace.est_supports, trace.est_xhat, trace.noise,
                        trace.a, ratio, budget);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + out_path + " for writing");
  out << "t,a,b,delta,theta,t1,beta_bound,beta_measured\n";
  char buf[256];
  for (int t = 1; t <= trace.traj.horizon(); ++t) {
    const kfcs::Vector beta_on_support = kfcs::subvector(
        trace.traj.x[t] - trace.x_init[t], trace.est_supports[t - 1]);
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", t,
                  bounds.a[t], bounds.b[t], bounds.delta[t], bounds.theta[t],
                  bounds.t1[t], bounds.beta_bound[t], beta_on_support.norm());
    out << buf;
  }
  std::cout << out_path << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive sparse reconstruction toolkit"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment");
  std::string sim_config;
  int sim_trials = 0;
  long sim_seed = -1;
  std::string sim_out;
  simulate->add_option("--config", sim_config, "experiment config file")->required();
  simulate->add_option("--trials", sim_trials, "override trial count");
  simulate->add_option("--seed", sim_seed, "override master seed");
  simulate->add_option("--out", sim_out, "override output directory");

  auto* rip = app.add_subcommand("rip", "Exact RIP/ROC constants of a generated matrix");
  int rip_n = 0, rip_m = 0, rip_order = 0, rip_order2 = 0;
  long rip_seed = 1;
  std::uint64_t rip_budget = kfcs::kDefaultEnumerationBudget;
  rip->add_option("--n", rip_n, "rows")->required();
  rip->add_option("--m", rip_m, "columns")->required();
  rip->add_option("--seed", rip_seed, "matrix seed")->required();
  rip->add_option("--order", rip_order, "RIP order S")->required();
  rip->add_option("--order2", rip_order2, "second order for theta_{S,S2}");
  rip->add_option("--budget", rip_budget, "enumeration budget");

  auto* analyze = app.add_subcommand("analyze", "Stability-theory calculators");
  analyze->require_subcommand(1);

  auto* tau_det = analyze->add_subcommand("tau-det", "High-probability detection delay");
  double td_eps = 0.0, td_bstar = 0.0, td_sigma_sys2 = 0.0;
  int td_s = 0;
  tau_det->add_option("--eps", td_eps, "failure probability")->required();
  tau_det->add_option("--s", td_s, "additions per event")->required();
  tau_det->add_option("--bstar", td_bstar, "detection level B*")->required();
  tau_det->add_option("--sigma-sys2", td_sigma_sys2, "walk variance")->required();

  auto* bounds = analyze->add_subcommand("bounds", "Per-time error-bound trace");
  std::string bounds_config, bounds_out = "bounds.csv";
  std::uint64_t bounds_budget = kfcs::kDefaultEnumerationBudget;
  bounds->add_option("--config", bounds_config, "experiment config file")->required();
  bounds->add_option("--out", bounds_out, "output CSV path");
  bounds->add_option("--budget", bounds_budget, "RIP enumeration budget");

  try {
    app.parse(argc, argv);
    if (simulate->parsed())
      return run_simulate(sim_config, sim_trials, sim_seed, sim_out);
    if (rip->parsed())
      return run_rip(rip_n, rip_m, rip_seed, rip_order, rip_order2, rip_budget);
    if (tau_det->parsed()) return run_tau_det(td_eps, td_s, td_bstar, td_sigma_sys2);
    if (bounds->parsed()) return run_bounds(bounds_config, bounds_out, bounds_budget);
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  } catch (const kfcs::ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const kfcs::BudgetExceededError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
}
