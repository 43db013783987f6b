#include <omp.h>

#include <chrono>
#include <cstdio>

#include "kfcs/harness.hpp"
#include "kfcs/sensing.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

kfcs::ExperimentConfig bench_config() {
  kfcs::ExperimentConfig cfg;
  cfg.model = kfcs::ModelKind::kNoRemovals;
  cfg.walk = {64, 4, 2, 0, 5, 10, 1.0, 1.0, 20};
  cfg.n = 24;
  cfg.n0 = 24;
  cfg.noise = {kfcs::NoiseSpec::Kind::kGaussian, 0.1};
  cfg.algo.lambda = 0.4;
  cfg.algo.detect_threshold = 0.3;
  cfg.algo.delete_threshold = 0.0;
  cfg.algo.walk_variance = 1.0;
  cfg.algo.noise_variance = 0.01;
  cfg.algo.addition_cap_factor = 1.0;
  cfg.algo.init_measurements = 24;
  cfg.roster = {kfcs::EstimatorKind::kKfcs, kfcs::EstimatorKind::kGenieKf};
  cfg.trials = 24;
  cfg.master_seed = 7;
  return cfg;
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", omp_get_max_threads());

  {
    const kfcs::SensingMatrix a = kfcs::generate_gaussian_matrix(20, 40, 11);
    const int order = 4;

    auto start = std::chrono::steady_clock::now();
    const auto serial = kfcs::serial::rip_constant(a, order);
    const double t_serial = seconds_since(start);

    start = std::chrono::steady_clock::now();
    const auto parallel = kfcs::rip_constant(a, order);
    const double t_parallel = seconds_since(start);

    std::printf("rip order %d over %llu subsets\n", order,
                static_cast<unsigned long long>(parallel.subset_count));
    std::printf("  serial   %8.3f s  delta = %.12g\n", t_serial, serial.delta);
    std::printf("  parallel %8.3f s  delta = %.12g  (speedup %.2fx, match %s)\n\n",
                t_parallel, parallel.delta, t_serial / t_parallel,
                serial.delta == parallel.delta ? "exact" : "MISMATCH");
  }

  {
    const kfcs::SensingMatrix a = kfcs::generate_gaussian_matrix(16, 30, 3);

    auto start = std::chrono::steady_clock::now();
    const auto serial = kfcs::serial::roc_constant(a, 2, 3);
    const double t_serial = seconds_since(start);

    start = std::chrono::steady_clock::now();
    const auto parallel = kfcs::roc_constant(a, 2, 3);
    const double t_parallel = seconds_since(start);

    std::printf("roc orders (2,3) over %llu pairs\n",
                static_cast<unsigned long long>(parallel.pair_count));
    std::printf("  serial   %8.3f s  theta = %.12g\n", t_serial, serial.theta);
    std::printf("  parallel %8.3f s  theta = %.12g  (speedup %.2fx, match %s)\n\n",
                t_parallel, parallel.theta, t_serial / t_parallel,
                serial.theta == parallel.theta ? "exact" : "MISMATCH");
  }

  {
    kfcs::ExperimentConfig cfg = bench_config();

    cfg.threads = 1;
    auto start = std::chrono::steady_clock::now();
    const auto one = kfcs::run_experiment(cfg);
    const double t_one = seconds_since(start);

    cfg.threads = 0;
    start = std::chrono::steady_clock::now();
    const auto many = kfcs::run_experiment(cfg);
    const double t_many = seconds_since(start);

    const bool identical = one.err2_sum == many.err2_sum &&
                           one.energy_sum == many.energy_sum;
    std::printf("monte carlo, %d trials x %d steps\n", cfg.trials, cfg.horizon());
    std::printf("  1 thread  %8.3f s\n", t_one);
    std::printf("  default   %8.3f s  (speedup %.2fx, metrics %s)\n", t_many,
                t_one / t_many, identical ? "identical" : "MISMATCH");
  }
  return 0;
}
