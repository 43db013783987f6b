#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "kfcs/models.hpp"
#include "kfcs/sensing.hpp"

using namespace kfcs;

namespace {

// Support-event cardinalities, checked step by step against the schedule.
void check_event_cardinalities(const SparseTrajectory& traj, int additions,
                               int removals) {
  for (int t = 1; t <= traj.horizon(); ++t) {
    const auto added = set_difference(traj.supports[t], traj.supports[t - 1]);
    const auto removed = set_difference(traj.supports[t - 1], traj.supports[t]);
    const bool is_add = std::find(traj.addition_times.begin(), traj.addition_times.end(),
                                  t) != traj.addition_times.end();
    const bool is_rem = std::find(traj.removal_times.begin(), traj.removal_times.end(),
                                  t) != traj.removal_times.end();
    CHECK(static_cast<int>(added.size()) == (is_add ? additions : 0));
    CHECK(static_cast<int>(removed.size()) == (is_rem ? removals : 0));
  }
}

void check_exact_support(const SparseTrajectory& traj) {
  for (int t = 0; t <= traj.horizon(); ++t) {
    for (int i = 0; i < traj.m; ++i) {
      if (!set_contains(traj.supports[t], i)) CHECK(traj.x[t][i] == 0.0);
    }
  }
}

}  // namespace

TEST_CASE("model-1 schedule: additions every d steps up to the size cap") {
  RandomWalkParams p;
  p.m = 256;
  p.initial_size = 8;
  p.additions = 2;
  p.removals = 0;
  p.spacing = 5;
  p.max_size = 26;
  p.sigma_sys0 = 1.0;
  p.sigma_sys = 1.0;
  p.horizon = 60;
  const SparseTrajectory traj = simulate_random_walk(p, 99);

  // ceil((26 - 8) / 2) = 9 events of exactly Sa additions each.
  const std::vector<int> expected{1, 6, 11, 16, 21, 26, 31, 36, 41};
  CHECK(traj.addition_times == expected);
  CHECK(traj.removal_times.empty());
  for (int t = 0; t <= 60; ++t) {
    const int size = static_cast<int>(traj.supports[t].size());
    if (t >= 46) CHECK(size == 26);
    CHECK(size <= 26);
  }
  check_event_cardinalities(traj, 2, 0);
  check_exact_support(traj);
}

TEST_CASE("no events when additions and removals are zero") {
  RandomWalkParams p;
  p.m = 32;
  p.initial_size = 5;
  p.additions = 0;
  p.removals = 0;
  p.spacing = 4;
  p.max_size = 5;
  p.horizon = 12;
  const SparseTrajectory traj = simulate_random_walk(p, 5);
  CHECK(traj.addition_times.empty());
  for (int t = 1; t <= 12; ++t) CHECK(traj.supports[t] == traj.supports[0]);
}

TEST_CASE("zero walk variance freezes values; new entries stay at zero") {
  RandomWalkParams p;
  p.m = 40;
  p.initial_size = 4;
  p.additions = 2;
  p.removals = 0;
  p.spacing = 3;
  p.max_size = 8;
  p.sigma_sys0 = 2.0;
  p.sigma_sys = 0.0;
  p.horizon = 10;
  const SparseTrajectory traj = simulate_random_walk(p, 17);
  for (int t = 1; t <= 10; ++t) {
    for (int i : traj.supports[0]) CHECK(traj.x[t][i] == traj.x[0][i]);
    for (int i : set_difference(traj.supports[t], traj.supports[0]))
      CHECK(traj.x[t][i] == 0.0);
  }
}

TEST_CASE("removals drop the smallest-magnitude coefficients") {
  RandomWalkParams p;
  p.m = 64;
  p.initial_size = 6;
  p.additions = 2;
  p.removals = 2;
  p.spacing = 4;
  p.max_size = 10;
  p.horizon = 20;
  const SparseTrajectory traj = simulate_random_walk(p, 23);
  CHECK(!traj.removal_times.empty());
  for (int t_rem : traj.removal_times) {
    const auto removed = set_difference(traj.supports[t_rem - 1], traj.supports[t_rem]);
    REQUIRE(removed.size() == 2);
    double removed_max = 0.0;
    for (int i : removed)
      removed_max = std::max(removed_max, std::abs(traj.x[t_rem - 1][i]));
    for (int i : set_intersection(traj.supports[t_rem - 1], traj.supports[t_rem]))
      CHECK(std::abs(traj.x[t_rem - 1][i]) >= removed_max - 1e-14);
  }
  check_event_cardinalities(traj, 2, 2);
  check_exact_support(traj);
}

TEST_CASE("model-2 has exactly ceil((smax-s0)/sa) addition events and nested supports") {
  RandomWalkParams p;
  p.m = 128;
  p.initial_size = 8;
  p.additions = 4;
  p.removals = 7;  // forced to zero by simulate_no_removals
  p.spacing = 10;
  p.max_size = 20;
  p.horizon = 45;
  const SparseTrajectory traj = simulate_no_removals(p, 31);
  CHECK(traj.addition_times == std::vector<int>{1, 11, 21});
  CHECK(traj.removal_times.empty());
  for (int t = 1; t <= 45; ++t) {
    CHECK(set_difference(traj.supports[t - 1], traj.supports[t]).empty());
    if (t >= 21) CHECK(static_cast<int>(traj.supports[t].size()) == 20);
  }
}

TEST_CASE("model-2 with smax equal to s0 is a pure fixed-support walk") {
  RandomWalkParams p;
  p.m = 24;
  p.initial_size = 6;
  p.additions = 2;
  p.spacing = 5;
  p.max_size = 6;
  p.horizon = 15;
  const SparseTrajectory traj = simulate_no_removals(p, 47);
  CHECK(traj.addition_times.empty());
  for (int t = 1; t <= 15; ++t) CHECK(traj.supports[t] == traj.supports[0]);
}

TEST_CASE("bounded-power schedule reproduces the reference event times") {
  BoundedPowerParams p;
  p.m = 200;
  p.initial_size = 20;
  p.swap_size = 2;
  p.ramp_rate = 0.2;
  p.plateau = 1.0;
  p.spacing = 8;
  p.ramp_down = 3;
  p.horizon = 24;
  const SparseTrajectory traj = simulate_bounded_power(p, 71);

  CHECK(traj.addition_times == std::vector<int>{2, 10, 18});
  CHECK(traj.removal_times == std::vector<int>{9, 17});
  for (int t = 0; t <= 24; ++t) {
    const int size = static_cast<int>(traj.supports[t].size());
    CHECK((size == 20 || size == 22));
  }
  check_exact_support(traj);
}

TEST_CASE("bounded-power decrease begins two steps before the removal") {
  BoundedPowerParams p;
  p.m = 60;
  p.initial_size = 10;
  p.swap_size = 2;
  p.ramp_rate = 0.2;
  p.plateau = 1.0;
  p.spacing = 8;
  p.ramp_down = 3;
  p.horizon = 24;
  const SparseTrajectory traj = simulate_bounded_power(p, 13);
  REQUIRE(!traj.removal_times.empty());
  for (const int t_rem : traj.removal_times) {
    const auto removed = set_difference(traj.supports[t_rem - 1], traj.supports[t_rem]);
    REQUIRE(static_cast<int>(removed.size()) == 2);
    for (int i : removed) {
      CHECK(std::abs(traj.x[t_rem - 3][i]) == doctest::Approx(1.0));        // plateau
      CHECK(std::abs(traj.x[t_rem - 2][i]) == doctest::Approx(1.0 - 0.2));  // first decrease
      CHECK(std::abs(traj.x[t_rem - 1][i]) == doctest::Approx(1.0 - 0.4));
      CHECK(traj.x[t_rem][i] == 0.0);
    }
  }
}

TEST_CASE("bounded-power signal power stays within a factor of two") {
  BoundedPowerParams p;
  p.m = 200;
  p.initial_size = 20;
  p.swap_size = 2;
  p.ramp_rate = 0.2;
  p.plateau = 1.0;
  p.spacing = 8;
  p.ramp_down = 3;
  p.horizon = 24;
  for (const auto seed : {1u, 2u, 3u}) {
    const SparseTrajectory traj = simulate_bounded_power(p, seed);
    double lo = 1e300, hi = 0.0;
    for (int t = 0; t <= traj.horizon(); ++t) {
      const double power = traj.x[t].squaredNorm();
      lo = std::min(lo, power);
      hi = std::max(hi, power);
    }
    CHECK(hi < 2.0 * lo);
  }
}

TEST_CASE("bounded-power with zero swaps is a constant plateau signal") {
  BoundedPowerParams p;
  p.m = 30;
  p.initial_size = 7;
  p.swap_size = 0;
  p.ramp_rate = 0.2;
  p.plateau = 1.0;
  p.spacing = 8;
  p.ramp_down = 3;
  p.horizon = 12;
  const SparseTrajectory traj = simulate_bounded_power(p, 3);
  CHECK(traj.addition_times.empty());
  CHECK(traj.removal_times.empty());
  for (int t = 0; t <= 12; ++t) {
    CHECK(traj.supports[t] == traj.supports[0]);
    for (int i : traj.supports[t]) CHECK(std::abs(traj.x[t][i]) == doctest::Approx(1.0));
  }
}

TEST_CASE("generators are reproducible and seeds matter") {
  RandomWalkParams p;
  p.m = 50;
  p.initial_size = 5;
  p.additions = 1;
  p.removals = 1;
  p.spacing = 4;
  p.max_size = 8;
  p.horizon = 16;
  const SparseTrajectory a = simulate_random_walk(p, 1234);
  const SparseTrajectory b = simulate_random_walk(p, 1234);
  const SparseTrajectory c = simulate_random_walk(p, 1235);
  for (int t = 0; t <= 16; ++t) {
    CHECK(a.x[t] == b.x[t]);
    CHECK(a.supports[t] == b.supports[t]);
  }
  bool any_diff = false;
  for (int t = 0; t <= 16 && !any_diff; ++t) any_diff = a.x[t] != c.x[t];
  CHECK(any_diff);
}

TEST_CASE("measurement model") {
  const SensingMatrix a = generate_gaussian_matrix(6, 12, 8);
  Vector x = Vector::Zero(12);
  x[4] = 1.5;

  SUBCASE("zero noise scale is exactly linear") {
    const Vector y = measure(x, a, NoiseSpec{NoiseSpec::Kind::kGaussian, 0.0}, 9u);
    CHECK((y - a.entries * x).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("zero signal returns pure noise") {
    const Vector y =
        measure(Vector::Zero(12), a, NoiseSpec{NoiseSpec::Kind::kGaussian, 0.3}, 10u);
    CHECK(y.lpNorm<Eigen::Infinity>() > 0.0);
  }
  SUBCASE("uniform noise respects the half-width bound") {
    const NoiseSpec spec{NoiseSpec::Kind::kUniform, 0.1266};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const Vector y = measure(Vector::Zero(12), a, spec, seed);
      CHECK(y.lpNorm<Eigen::Infinity>() <= 0.1266);
    }
  }
  SUBCASE("deterministic for a fixed seed") {
    const NoiseSpec spec{NoiseSpec::Kind::kGaussian, 0.2};
    CHECK(measure(x, a, spec, 77u) == measure(x, a, spec, 77u));
  }
  SUBCASE("dimension mismatch is rejected") {
    CHECK_THROWS_AS(measure(Vector::Zero(5), a, NoiseSpec{}, 1u), ParameterError);
  }
}

TEST_CASE("parameter validation") {
  RandomWalkParams p;
  p.m = 10;
  p.initial_size = 4;
  p.additions = 3;
  p.removals = 0;
  p.spacing = 2;
  p.max_size = 12;  // exceeds m
  p.horizon = 8;
  CHECK_THROWS_AS(simulate_random_walk(p, 1), ParameterError);

  RandomWalkParams q = p;
  q.max_size = 10;
  q.spacing = 1;
  CHECK_THROWS_AS(simulate_random_walk(q, 1), ParameterError);

  RandomWalkParams r = p;
  r.max_size = 8;
  r.removals = 6;  // underflows the support at the first removal
  CHECK_THROWS_AS(simulate_random_walk(r, 1), ParameterError);

  BoundedPowerParams bp;
  bp.m = 20;
  bp.initial_size = 5;
  bp.swap_size = 1;
  bp.ramp_rate = 0.5;
  bp.plateau = 1.0;
  bp.spacing = 8;
  bp.ramp_down = 4;  // (4-1)*0.5 >= 1.0 crosses zero before the removal step
  bp.horizon = 10;
  CHECK_THROWS_AS(simulate_bounded_power(bp, 1), ParameterError);
}

TEST_CASE("trajectory csv and event sidecar round trip") {
  RandomWalkParams p;
  p.m = 20;
  p.initial_size = 3;
  p.additions = 1;
  p.removals = 0;
  p.spacing = 3;
  p.max_size = 6;
  p.horizon = 9;
  const SparseTrajectory traj = simulate_random_walk(p, 2024);

  const auto dir = std::filesystem::temp_directory_path() / "kfcs_models_test";
  std::filesystem::create_directories(dir);
  const std::string csv = (dir / "traj.csv").string();
  save_trajectory_csv(traj, csv);
  save_trajectory_events(traj, (dir / "traj_events.json").string());

  const SparseTrajectory back = load_trajectory_csv(csv, p.m, p.horizon);
  for (int t = 0; t <= 9; ++t) {
    CHECK(back.supports[t] == traj.supports[t]);
    CHECK((back.x[t] - traj.x[t]).lpNorm<Eigen::Infinity>() == 0.0);
  }
}
