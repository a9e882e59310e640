#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snm/analysis.hpp"
#include "snm/sensitivity.hpp"

namespace snm {

// Percentile selection: release the value closest to the p-th percentile of
// an ordered numeric dataset, choosing from a finite grid of candidates.
struct PercentileInstance {
  std::vector<double> data;          // sorted ascending, values in [0, lambda]
  double lambda = 0.0;               // upper end of the value range
  int p = 50;                        // percentile, integer in [1, 99]
  std::vector<double> outcome_grid;  // increasing candidate values

  void validate() const;  // throws std::invalid_argument on bad instances
};

// 0-based index of the p-th percentile element: floor(p*n/100) clamped to
// [0, n-1].
int percentile_index(int n, int p);

// Value of the percentile element x_k.
double percentile_value(const PercentileInstance& inst);

// 1 if the candidate equals x_k, 0 otherwise.
double utility_percentile(const PercentileInstance& inst, double candidate);

// Utility of every grid candidate.
std::vector<double> percentile_utilities(const PercentileInstance& inst);

// j: the smaller of the runs of x_k-valued entries strictly left and right
// of position k (the repetition radius reported by the experiments).
int repetition_radius(const PercentileInstance& inst);

// Fewest record edits (insertions or deletions) that change the percentile
// value, computed exactly from the run geometry and the floor-based index
// arithmetic. A balanced run of j repetitions on each side flips after 2j+1
// edits at p = 50; asymmetric runs and extreme percentiles flip earlier or
// later, which is why this is computed instead of read off j.
int percentile_flip_distance(const PercentileInstance& inst);

// LS(x, t) = 1 iff t >= flip_distance - 1: one edit before the value can
// change, some neighboring pair already differs.
int percentile_local_sensitivity_at(const PercentileInstance& inst, int t);

// S = exp(-(flip_distance - 1) * beta), the exact smooth sensitivity (equal
// to the exhaustive enumeration whenever the value range has room on both
// sides of the percentile). beta == 0 degenerates to the global sensitivity
// and is allowed with a warning on stderr.
SmoothSensitivity percentile_smooth_sensitivity(const PercentileInstance& inst,
                                                double beta);

// Default candidate grid: the distinct data values joined with an even grid
// of `even_points` values over [0, lambda].
std::vector<double> default_outcome_grid(const std::vector<double>& sorted_data,
                                         double lambda, int even_points = 64);

// The same utility as a UtilityModel over a declared value universe, for
// brute-force sensitivity cross-checks. Outcomes are the universe values.
UtilityModel percentile_utility_model(const std::vector<double>& universe_values,
                                      int p);

struct PercentileCell {
  std::string mechanism;
  double epsilon = 0.0;
  double aee = 0.0;
  double bound = 0.0;  // expected-utility-error bound of the mechanism family
  int j = 0;
  double runtime_ms = 0.0;
};

struct PercentileExperimentConfig {
  std::vector<MechanismSpec> mechanisms;
  std::vector<double> epsilons;
  bool oracle = true;               // false: Monte Carlo frequencies
  std::int64_t trials = 1'000'000;  // Monte Carlo mode only
  std::uint64_t seed = 1;
  par::Mode mode = par::Mode::kOpenMP;
};

// Absolute expected error of each (mechanism, epsilon) cell against x_k,
// computed from the selection PMFs over the candidate grid.
std::vector<PercentileCell> run_percentile_experiment(
    const PercentileInstance& inst, const PercentileExperimentConfig& config);

}  // namespace snm
