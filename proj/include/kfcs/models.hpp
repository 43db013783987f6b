#pragma once

#include <cstdint>
#include <string>

#include "kfcs/rng.hpp"
#include "kfcs/types.hpp"

namespace kfcs {

// Random-walk model: support additions every d steps starting at t = 1,
// removals (when requested) one step before each addition time.
struct RandomWalkParams {
  int m = 0;
  int initial_size = 0;       // S0
  int additions = 0;          // Sa per addition event
  int removals = 0;           // Sr per removal event
  int spacing = 2;            // d, steps between addition times
  int max_size = 0;           // Smax
  double sigma_sys0 = 1.0;    // std dev of the initial coefficients
  double sigma_sys = 1.0;     // std dev of each walk increment
  int horizon = 2;            // T_end; trajectory holds t = 0..T_end
};

// Bounded-power model: each new coefficient enters at magnitude ramp_rate,
// climbs by ramp_rate per step to the plateau, holds, then walks down by
// ramp_rate for ramp_down steps and leaves the support. Additions start at
// t = 2 and repeat every spacing steps; the matching removals land one step
// before the next addition.
struct BoundedPowerParams {
  int m = 0;
  int initial_size = 0;       // S0, at plateau magnitude from t = 0
  int swap_size = 0;          // Sa = Sr per add/remove cycle
  double ramp_rate = 0.2;     // a_i
  double plateau = 1.0;       // M
  int spacing = 8;            // d
  int ramp_down = 3;          // r, steps of decrease ending in the removal
  int horizon = 2;
};

struct NoiseSpec {
  enum class Kind { kGaussian, kUniform };
  Kind kind = Kind::kGaussian;
  double scale = 0.0;  // sigma for Gaussian, half-width c for uniform; 0 = noiseless
};

struct SparseTrajectory {
  int m = 0;
  std::vector<Vector> x;          // indexed t = 0..horizon
  std::vector<IndexSet> supports; // exact support of x[t]
  std::vector<int> addition_times;
  std::vector<int> removal_times;

  int horizon() const { return static_cast<int>(x.size()) - 1; }
};

SparseTrajectory simulate_random_walk(const RandomWalkParams& p, std::uint64_t seed);

// Random walk with removals forced to zero; exactly
// ceil((max_size - initial_size) / additions) addition events.
SparseTrajectory simulate_no_removals(RandomWalkParams p, std::uint64_t seed);

SparseTrajectory simulate_bounded_power(const BoundedPowerParams& p, std::uint64_t seed);

Vector measure(const Vector& x, const SensingMatrix& a, const NoiseSpec& spec, Rng& rng);
Vector measure(const Vector& x, const SensingMatrix& a, const NoiseSpec& spec,
               std::uint64_t seed);

// CSV of the nonzero entries (t,index,value) plus a JSON sidecar listing the
// addition/removal times.
void save_trajectory_csv(const SparseTrajectory& traj, const std::string& path);
void save_trajectory_events(const SparseTrajectory& traj, const std::string& path);
SparseTrajectory load_trajectory_csv(const std::string& path, int m, int horizon);

}  // namespace kfcs
