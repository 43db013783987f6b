#include "kfcs/models.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace kfcs {

namespace {

void check_walk_params(const RandomWalkParams& p) {
  if (p.m < 1) throw ParameterError("signal length must be >= 1");
  if (p.initial_size < 0 || p.initial_size > p.m)
    throw ParameterError("initial support size out of range");
  if (p.max_size < p.initial_size || p.max_size > p.m)
    throw ParameterError("max support size must lie in [S0, m]");
  if (p.additions < 0 || p.removals < 0) throw ParameterError("negative event size");
  if (p.spacing < 2) throw ParameterError("spacing between additions must be >= 2");
  if (p.horizon < 1) throw ParameterError("horizon must be >= 1");
  if (p.sigma_sys0 < 0.0 || p.sigma_sys < 0.0) throw ParameterError("negative std dev");
}

std::vector<int> complement_of(const IndexSet& support, int m) {
  std::vector<int> comp;
  comp.reserve(m - support.size());
  std::size_t k = 0;
  for (int i = 0; i < m; ++i) {
    if (k < support.size() && support[k] == i) {
      ++k;
      continue;
    }
    comp.push_back(i);
  }
  return comp;
}

}  // namespace

SparseTrajectory simulate_random_walk(const RandomWalkParams& p, std::uint64_t seed) {
  check_walk_params(p);
  Rng rng(seed);

  SparseTrajectory traj;
  traj.m = p.m;
  traj.x.reserve(p.horizon + 1);
  traj.supports.reserve(p.horizon + 1);

  IndexSet support = rng.sample_indices(p.initial_size, p.m);
  Vector x = Vector::Zero(p.m);
  for (int i : support) x[i] = rng.normal(0.0, p.sigma_sys0);
  traj.x.push_back(x);
  traj.supports.push_back(support);

  for (int t = 1; t <= p.horizon; ++t) {
    // Removal times sit one step before each addition time.
    if (p.removals > 0 && t % p.spacing == 0) {
      if (static_cast<int>(support.size()) < p.removals)
        throw ParameterError("removal event would underflow the support");
      IndexSet victims;
      {
        std::vector<std::pair<double, int>> order;
        order.reserve(support.size());
        for (int i : support) order.emplace_back(std::abs(x[i]), i);
        std::sort(order.begin(), order.end());
        for (int k = 0; k < p.removals; ++k) victims.push_back(order[k].second);
        std::sort(victims.begin(), victims.end());
      }
      support = set_difference(support, victims);
      for (int i : victims) x[i] = 0.0;
      traj.removal_times.push_back(t);
    }
    if (p.additions > 0 && (t - 1) % p.spacing == 0 &&
        static_cast<int>(support.size()) < p.max_size) {
      const int count = std::min<int>(p.additions, p.max_size - support.size());
      if (static_cast<int>(support.size()) + count > p.m)
        throw ParameterError("addition event would exceed the signal length");
      const IndexSet fresh = rng.sample_from(count, complement_of(support, p.m));
      support = set_union(support, fresh);
      traj.addition_times.push_back(t);
    }
    for (int i : support) x[i] += rng.normal(0.0, p.sigma_sys);
    traj.x.push_back(x);
    traj.supports.push_back(support);
  }
  return traj;
}

SparseTrajectory simulate_no_removals(RandomWalkParams p, std::uint64_t seed) {
  p.removals = 0;
  return simulate_random_walk(p, seed);
}

SparseTrajectory simulate_bounded_power(const BoundedPowerParams& p, std::uint64_t seed) {
  if (p.m < 1) throw ParameterError("signal length must be >= 1");
  if (p.initial_size < 1 || p.initial_size + p.swap_size > p.m)
    throw ParameterError("bounded-power support sizes out of range");
  if (!(p.ramp_rate > 0.0) || !(p.plateau > 0.0) || p.ramp_rate >= p.plateau)
    throw ParameterError("need 0 < ramp_rate < plateau");
  if (p.ramp_down < 1 || (p.ramp_down - 1) * p.ramp_rate >= p.plateau)
    throw ParameterError("ramp-down would cross zero before the removal step");
  if (p.spacing < std::max(2, p.ramp_down + 1))
    throw ParameterError("spacing too small for the ramp-down");
  if (p.horizon < 1) throw ParameterError("horizon must be >= 1");

  Rng rng(seed);
  SparseTrajectory traj;
  traj.m = p.m;

  IndexSet support = rng.sample_indices(p.initial_size, p.m);
  std::vector<double> magnitude(p.m, 0.0), sign(p.m, 1.0);
  for (int i : support) {
    magnitude[i] = p.plateau;
    sign[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  }
  // Scheduled decreases: index -> (decrease start, removal time).
  std::map<int, std::pair<int, int>> scheduled;

  auto assemble = [&]() {
    Vector x = Vector::Zero(p.m);
    for (int i : support) x[i] = sign[i] * magnitude[i];
    traj.x.push_back(x);
    traj.supports.push_back(support);
  };
  assemble();

  for (int t = 1; t <= p.horizon; ++t) {
    IndexSet added_now;

    bool removed_any = false;
    for (auto it = scheduled.begin(); it != scheduled.end();) {
      if (it->second.second == t) {
        const int i = it->first;
        support = set_difference(support, {i});
        magnitude[i] = 0.0;
        removed_any = true;
        it = scheduled.erase(it);
      } else {
        ++it;
      }
    }
    if (removed_any) traj.removal_times.push_back(t);
    if (p.swap_size > 0 && t >= 2 && (t - 2) % p.spacing == 0) {
      // Pick this window's removal victims among settled plateau members.
      const int removal_time = t + p.spacing - 1;
      const int decrease_start = removal_time - p.ramp_down + 1;
      std::vector<int> eligible;
      for (int i : support)
        if (magnitude[i] == p.plateau && !scheduled.count(i)) eligible.push_back(i);
      if (static_cast<int>(eligible.size()) < p.swap_size)
        throw ParameterError("not enough plateau coefficients to schedule removals");
      for (int i : rng.sample_from(p.swap_size, eligible))
        scheduled[i] = {decrease_start, removal_time};

      added_now = rng.sample_from(p.swap_size, complement_of(support, p.m));
      for (int i : added_now) {
        magnitude[i] = p.ramp_rate;
        sign[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      }
      support = set_union(support, added_now);
      traj.addition_times.push_back(t);
    }

    for (int i : support) {
      if (set_contains(added_now, i)) continue;  // entered this step at ramp_rate
      const auto it = scheduled.find(i);
      if (it != scheduled.end() && t >= it->second.first) {
        magnitude[i] -= p.ramp_rate;
      } else if (magnitude[i] < p.plateau) {
        magnitude[i] = std::min(magnitude[i] + p.ramp_rate, p.plateau);
      }
    }
    assemble();
  }
  return traj;
}

Vector measure(const Vector& x, const SensingMatrix& a, const NoiseSpec& spec, Rng& rng) {
  if (x.size() != a.cols()) throw ParameterError("measure: signal length != columns of A");
  if (spec.scale < 0.0) throw ParameterError("measure: negative noise scale");
  Vector y = a.entries * x;
  if (spec.scale > 0.0) {
    for (int i = 0; i < a.rows(); ++i) {
      y[i] += spec.kind == NoiseSpec::Kind::kGaussian
                  ? rng.normal(0.0, spec.scale)
                  : rng.uniform(-spec.scale, spec.scale);
    }
  }
  return y;
}

Vector measure(const Vector& x, const SensingMatrix& a, const NoiseSpec& spec,
               std::uint64_t seed) {
  Rng rng(seed);
  return measure(x, a, spec, rng);
}

void save_trajectory_csv(const SparseTrajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "t,index,value\n";
  char buf[64];
  for (int t = 0; t <= traj.horizon(); ++t) {
    for (int i : traj.supports[t]) {
      std::snprintf(buf, sizeof(buf), "%.17g", traj.x[t][i]);
      out << t << ',' << i << ',' << buf << '\n';
    }
  }
}

void save_trajectory_events(const SparseTrajectory& traj, const std::string& path) {
  nlohmann::json j;
  j["m"] = traj.m;
  j["horizon"] = traj.horizon();
  j["addition_times"] = traj.addition_times;
  j["removal_times"] = traj.removal_times;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

SparseTrajectory load_trajectory_csv(const std::string& path, int m, int horizon) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  SparseTrajectory traj;
  traj.m = m;
  traj.x.assign(horizon + 1, Vector::Zero(m));
  traj.supports.assign(horizon + 1, {});
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    const int t = std::stoi(tok);
    std::getline(ss, tok, ',');
    const int i = std::stoi(tok);
    std::getline(ss, tok, ',');
    traj.x[t][i] = std::stod(tok);
    traj.supports[t].push_back(i);
  }
  return traj;
}

}  // namespace kfcs
