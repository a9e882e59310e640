#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "snm/percentile.hpp"
#include "snm/synthetic.hpp"

using namespace snm;

namespace {

PercentileInstance tiny(std::vector<double> data, int p = 50) {
  PercentileInstance inst;
  inst.data = std::move(data);
  inst.lambda = 10.0;
  inst.p = p;
  inst.outcome_grid = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  return inst;
}

double cell_aee(const std::vector<PercentileCell>& rows,
                const std::string& mechanism, double epsilon) {
  for (const auto& row : rows) {
    if (row.mechanism == mechanism && row.epsilon == epsilon) return row.aee;
  }
  throw std::out_of_range("cell not found");
}

}  // namespace

TEST_CASE("percentile index arithmetic") {
  CHECK(percentile_index(3, 50) == 1);
  CHECK(percentile_index(4, 50) == 2);
  CHECK(percentile_index(10, 99) == 9);
  CHECK(percentile_index(1, 99) == 0);
  CHECK(percentile_index(1, 1) == 0);
  CHECK_THROWS_AS(percentile_index(0, 50), std::invalid_argument);
}

TEST_CASE("percentile utility is the indicator of the percentile value") {
  const PercentileInstance inst = tiny({1, 2, 3});
  CHECK(utility_percentile(inst, 2) == 1.0);
  CHECK(utility_percentile(inst, 3) == 0.0);
  const PercentileInstance runs = tiny({5, 5, 5});
  CHECK(utility_percentile(runs, 5) == 1.0);
  const auto u = percentile_utilities(runs);
  double total = 0.0;
  for (double v : u) total += v;
  CHECK(total == 1.0);
}

TEST_CASE("repetition radius") {
  CHECK(repetition_radius(tiny({1, 2, 3})) == 0);
  CHECK(repetition_radius(tiny({5, 5, 5})) == 1);
  CHECK(repetition_radius(tiny({1, 5, 5, 5, 9})) == 1);
  CHECK(repetition_radius(tiny({5, 5})) == 0);
}

TEST_CASE("local sensitivity thresholds for the spec's run shapes") {
  // asymmetric pair run: value flips after 2 edits
  const PercentileInstance pair = tiny({5, 5});
  CHECK(percentile_local_sensitivity_at(pair, 0) == 0);
  CHECK(percentile_local_sensitivity_at(pair, 1) == 1);
  // left-heavy run of four: flips after 4 edits
  const PercentileInstance four = tiny({5, 5, 5, 5});
  CHECK(percentile_flip_distance(four) == 4);
  CHECK(percentile_local_sensitivity_at(four, 2) == 0);
  CHECK(percentile_local_sensitivity_at(four, 3) == 1);
}

TEST_CASE("smooth sensitivity values for known run shapes") {
  // flip distance 2 gives a single step of attenuation
  const SmoothSensitivity pair = percentile_smooth_sensitivity(tiny({5, 5}), 0.1);
  CHECK(pair.value == doctest::Approx(std::exp(-0.1)).epsilon(1e-12));
  CHECK(pair.value == doctest::Approx(0.9048).epsilon(1e-4));

  // a run of 21 fives balanced around the median flips after 21 edits
  std::vector<double> wide(21, 5.0);
  const SmoothSensitivity deep = percentile_smooth_sensitivity(tiny(wide), 0.5);
  CHECK(deep.witness_t == 20);
  CHECK(deep.value == doctest::Approx(std::exp(-10.0)).epsilon(1e-9));

  // unique percentile: no attenuation is sound
  const SmoothSensitivity unique =
      percentile_smooth_sensitivity(tiny({1, 2, 3}), 0.5);
  CHECK(unique.value == 1.0);
}

TEST_CASE("percentile at 99 is fragile to a single insertion") {
  std::vector<double> data(10, 5.0);
  const PercentileInstance inst = tiny(data, 99);
  CHECK(percentile_flip_distance(inst) == 1);
  CHECK(percentile_smooth_sensitivity(inst, 0.3).value == 1.0);
}

TEST_CASE("instance validation") {
  PercentileInstance inst = tiny({1, 2, 3});
  inst.outcome_grid = {0, 1, 3};  // percentile value 2 missing
  CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
  PercentileInstance unsorted = tiny({3, 1, 2});
  CHECK_THROWS_AS(unsorted.validate(), std::invalid_argument);
}

TEST_CASE("default outcome grid joins data values with an even grid") {
  const auto grid = default_outcome_grid({2.0, 5.0, 5.0, 7.5}, 10.0, 5);
  // even grid 0, 2.5, 5, 7.5, 10 plus distinct data values 2, 5, 7.5
  CHECK(grid == std::vector<double>{0.0, 2.0, 2.5, 5.0, 7.5, 10.0});
}

TEST_CASE("synthetic instance has the requested radius and an off-center grid") {
  const PercentileInstance inst = synthetic_percentile_instance(5);
  CHECK(repetition_radius(inst) == 5);
  CHECK(percentile_value(inst) == doctest::Approx(50.0));
  CHECK(percentile_flip_distance(inst) == 11);

  // the non-target grid mean must sit near, but not on, the target; the gap
  // drives every mechanism's expected error while staying inside the oracle
  // comparison tolerance at the near-uniform end
  double sum = 0.0;
  int count = 0;
  for (double v : inst.outcome_grid) {
    if (v != 50.0) {
      sum += v;
      ++count;
    }
  }
  const double off_target_mean = sum / count;
  CHECK(std::abs(off_target_mean - 50.0) > 0.01);
  CHECK(std::abs(off_target_mean - 50.0) < 0.30);
}

TEST_CASE("experiment: smooth noisy max beats the exponential mechanism at eps 1") {
  const PercentileInstance inst = synthetic_percentile_instance(5);
  PercentileExperimentConfig config;
  config.mechanisms = {MechanismSpec{MechanismId::kSnmLaplace},
                       MechanismSpec{MechanismId::kEm}};
  config.epsilons = {1.0};
  const auto rows = run_percentile_experiment(inst, config);
  CHECK(cell_aee(rows, "snm-lap", 1.0) < cell_aee(rows, "em", 1.0));
}

TEST_CASE("experiment rows are reproducible and carry the radius") {
  const PercentileInstance inst = synthetic_percentile_instance(3, 61);
  PercentileExperimentConfig config;
  config.mechanisms = {MechanismSpec{MechanismId::kEm},
                       MechanismSpec{MechanismId::kRnmExponential}};
  config.epsilons = {0.5, 2.0};
  const auto a = run_percentile_experiment(inst, config);
  const auto b = run_percentile_experiment(inst, config);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mechanism == b[i].mechanism);
    CHECK(a[i].aee == b[i].aee);
    CHECK(a[i].j == 3);
    CHECK(a[i].bound > 0.0);
  }
}

TEST_CASE("aee decreases with the budget") {
  const PercentileInstance inst = synthetic_percentile_instance(5);
  PercentileExperimentConfig config;
  config.mechanisms = {MechanismSpec{MechanismId::kSnmLaplace},
                       MechanismSpec{MechanismId::kEm},
                       MechanismSpec{MechanismId::kRnmExponential}};
  config.epsilons = {1.0, 10.0};
  const auto rows = run_percentile_experiment(inst, config);
  for (const auto& name : {"snm-lap", "em", "rnm-exp"}) {
    CHECK(cell_aee(rows, name, 10.0) <= cell_aee(rows, name, 1.0) + 1e-4);
  }
}

TEST_CASE("monte carlo mode tracks the oracle within its tolerance") {
  // narrow value range so the sampled expected value resolves sharply
  const PercentileInstance inst = synthetic_percentile_instance(2, 41, 50, 20.0);
  PercentileExperimentConfig config;
  config.mechanisms = {MechanismSpec{MechanismId::kEm},
                       MechanismSpec{MechanismId::kSnmLaplace}};
  config.epsilons = {2.0};
  const auto oracle = run_percentile_experiment(inst, config);
  config.oracle = false;
  config.trials = 400'000;
  config.seed = 19;
  const auto mc = run_percentile_experiment(inst, config);
  const auto mc_again = run_percentile_experiment(inst, config);
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CHECK(std::abs(oracle[i].aee - mc[i].aee) < 0.03);
    CHECK(mc[i].aee == mc_again[i].aee);  // seeded reproducibility
  }
}

TEST_CASE("unsupported mechanisms are rejected") {
  const PercentileInstance inst = synthetic_percentile_instance(2, 41);
  PercentileExperimentConfig config;
  config.mechanisms = {MechanismSpec{MechanismId::kEmSmoothUnsafe}};
  config.epsilons = {1.0};
  CHECK_THROWS_AS(run_percentile_experiment(inst, config), std::invalid_argument);
}
