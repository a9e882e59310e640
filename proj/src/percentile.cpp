#include "snm/percentile.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace snm {

void PercentileInstance::validate() const {
  if (data.empty()) throw std::invalid_argument("percentile: empty dataset");
  if (!(lambda > 0.0)) throw std::invalid_argument("percentile: lambda must be positive");
  if (p < 1 || p > 99) throw std::invalid_argument("percentile: p must lie in [1, 99]");
  if (!std::is_sorted(data.begin(), data.end())) {
    throw std::invalid_argument("percentile: data must be sorted ascending");
  }
  if (data.front() < 0.0 || data.back() > lambda) {
    throw std::invalid_argument("percentile: values must lie in [0, lambda]");
  }
  if (!std::is_sorted(outcome_grid.begin(), outcome_grid.end())) {
    throw std::invalid_argument("percentile: outcome grid must be increasing");
  }
  const double xk = percentile_value(*this);
  if (std::find(outcome_grid.begin(), outcome_grid.end(), xk) == outcome_grid.end()) {
    throw std::invalid_argument(
        "percentile: outcome grid must contain the percentile value");
  }
}

int percentile_index(int n, int p) {
  if (n < 1) throw std::invalid_argument("percentile_index: n >= 1 required");
  const int k = (p * n) / 100;
  return std::clamp(k, 0, n - 1);
}

double percentile_value(const PercentileInstance& inst) {
  const int k = percentile_index(static_cast<int>(inst.data.size()), inst.p);
  return inst.data[static_cast<std::size_t>(k)];
}

double utility_percentile(const PercentileInstance& inst, double candidate) {
  return candidate == percentile_value(inst) ? 1.0 : 0.0;
}

std::vector<double> percentile_utilities(const PercentileInstance& inst) {
  const double xk = percentile_value(inst);
  std::vector<double> u(inst.outcome_grid.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = inst.outcome_grid[i] == xk ? 1.0 : 0.0;
  }
  return u;
}

int repetition_radius(const PercentileInstance& inst) {
  const int n = static_cast<int>(inst.data.size());
  const int k = percentile_index(n, inst.p);
  const double xk = inst.data[static_cast<std::size_t>(k)];
  int left = 0, right = 0;
  for (int i = 0; i < k; ++i) {
    if (inst.data[static_cast<std::size_t>(i)] == xk) ++left;
  }
  for (int i = k + 1; i < n; ++i) {
    if (inst.data[static_cast<std::size_t>(i)] == xk) ++right;
  }
  return std::min(left, right);
}

int percentile_flip_distance(const PercentileInstance& inst) {
  const int n = static_cast<int>(inst.data.size());
  const int p = inst.p;
  const int k = percentile_index(n, p);
  const double v = inst.data[static_cast<std::size_t>(k)];

  int below = 0, run = 0;
  for (double x : inst.data) {
    if (x < v) ++below;
    if (x == v) ++run;
  }
  const int run_last = below + run - 1;  // position of the last run element

  auto index_of = [p](int m) {
    return m < 1 ? -1 : std::clamp((p * m) / 100, 0, m - 1);
  };

  // Candidate strategies, r removals plus a insertions:
  //  - exit left: remove run or above-run elements, insert below; the run
  //    start moves to below + a while the index must drop under it
  //  - exit right: remove below or run elements, insert above; the run end
  //    moves to run_last - r while the index must pass it
  //  - removing the entire run always changes the value
  const int cap = 50'000;  // beyond this the attenuation is below 1e-21
  int flip = std::min(run, cap);
  for (int edits = 1; edits < flip; ++edits) {
    for (int r = 0; r <= edits; ++r) {
      const int a = edits - r;
      const int m = n - r + a;
      if (m < 0) continue;
      if (r <= (run - 1) + (n - run_last - 1) && index_of(m) < below + a) {
        flip = edits;
        break;
      }
      if (r <= below + (run - 1) && index_of(m) > run_last - r) {
        flip = edits;
        break;
      }
    }
  }
  return flip;
}

int percentile_local_sensitivity_at(const PercentileInstance& inst, int t) {
  if (t < 0) throw std::invalid_argument("local sensitivity: t >= 0 required");
  return t >= percentile_flip_distance(inst) - 1 ? 1 : 0;
}

SmoothSensitivity percentile_smooth_sensitivity(const PercentileInstance& inst,
                                                double beta) {
  if (beta < 0.0) throw std::invalid_argument("smooth sensitivity: beta >= 0");
  if (beta == 0.0) {
    std::fputs("warning: percentile smooth sensitivity with beta = 0 degenerates "
               "to the global sensitivity\n", stderr);
  }
  const int witness = percentile_flip_distance(inst) - 1;
  SmoothSensitivity s;
  s.beta = beta;
  s.witness_t = beta == 0.0 ? 0 : witness;
  s.value = std::exp(-beta * witness);
  return s;
}

std::vector<double> default_outcome_grid(const std::vector<double>& sorted_data,
                                         double lambda, int even_points) {
  std::vector<double> grid(sorted_data);
  for (int i = 0; i < even_points; ++i) {
    grid.push_back(lambda * static_cast<double>(i) /
                   static_cast<double>(even_points - 1));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

UtilityModel percentile_utility_model(const std::vector<double>& universe_values,
                                      int p) {
  if (!std::is_sorted(universe_values.begin(), universe_values.end())) {
    throw std::invalid_argument("universe values must be sorted");
  }
  UtilityModel u;
  u.outcome_count = static_cast<int>(universe_values.size());
  u.global_sensitivity = 1.0;
  u.monotonic = false;
  u.evaluate = [universe_values, p](const Counts& counts, int r) {
    const int n = database_size(counts);
    if (n == 0) return 0.0;  // no percentile to match
    int k = percentile_index(n, p);
    // k-th smallest value of the multiset
    double xk = universe_values.back();
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (k < counts[i]) {
        xk = universe_values[i];
        break;
      }
      k -= counts[i];
    }
    return universe_values[static_cast<std::size_t>(r)] == xk ? 1.0 : 0.0;
  };
  return u;
}

std::vector<PercentileCell> run_percentile_experiment(
    const PercentileInstance& inst, const PercentileExperimentConfig& config) {
  inst.validate();
  const std::vector<double> utilities = percentile_utilities(inst);
  const double target = percentile_value(inst);
  const int j = repetition_radius(inst);
  const int r_count = static_cast<int>(inst.outcome_grid.size());
  const double delta_u = 1.0;
  const Rng base(config.seed);

  struct Cell {
    MechanismSpec spec;
    double epsilon;
  };
  std::vector<Cell> cells;
  for (const MechanismSpec& spec : config.mechanisms) {
    if (spec.id == MechanismId::kEmSmoothUnsafe) {
      throw std::invalid_argument(
          "the unsafe mechanism is not part of the experiment surface");
    }
    for (double eps : config.epsilons) cells.push_back({spec, eps});
  }

  std::vector<PercentileCell> rows(cells.size());
  auto run_cell = [&](std::size_t idx) {
    const auto& cell = cells[idx];
    const auto t0 = std::chrono::steady_clock::now();

    SmoothSensitivity s;
    double bound = 0.0;
    if (mechanism_is_snm(cell.spec.id)) {
      const CalibratedNoise noise = mechanism_noise(cell.spec, cell.epsilon);
      s = percentile_smooth_sensitivity(inst, noise.beta);
      bound = snm_error_bound(s.value, cell.epsilon, r_count);
    } else {
      bound = rnm_error_bound(delta_u, cell.epsilon, r_count);
    }

    SelectionPmf pmf;
    if (config.oracle) {
      pmf = mechanism_pmf_oracle(cell.spec, utilities, delta_u,
                                 /*monotonic=*/false, s, cell.epsilon);
    } else {
      // cells already run in parallel; keep the inner kernel serial
      pmf = mechanism_pmf_montecarlo(cell.spec, utilities, delta_u,
                                     /*monotonic=*/false, s, cell.epsilon,
                                     config.trials, base.split(idx),
                                     par::Mode::kSerial);
    }

    const auto t1 = std::chrono::steady_clock::now();
    PercentileCell& out = rows[idx];
    out.mechanism = mechanism_name(cell.spec.id);
    out.epsilon = cell.epsilon;
    out.aee = absolute_expected_value_error(pmf, inst.outcome_grid, target);
    out.bound = bound;
    out.j = j;
    out.runtime_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
  };

  const std::int64_t n = static_cast<std::int64_t>(cells.size());
  if (config.mode == par::Mode::kSerial) {
    for (std::int64_t i = 0; i < n; ++i) run_cell(static_cast<std::size_t>(i));
  } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) run_cell(static_cast<std::size_t>(i));
#else
    for (std::int64_t i = 0; i < n; ++i) run_cell(static_cast<std::size_t>(i));
#endif
  }
  return rows;
}

}  // namespace snm
