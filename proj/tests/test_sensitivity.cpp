#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "snm/percentile.hpp"
#include "snm/sensitivity.hpp"

using namespace snm;

namespace {

UtilityModel constant_utility(int outcomes) {
  UtilityModel u;
  u.outcome_count = outcomes;
  u.global_sensitivity = 1.0;
  u.evaluate = [](const Counts&, int) { return 0.0; };
  return u;
}

// worst case: every database has a neighbor changing some score by one
UtilityModel parity_utility() {
  UtilityModel u;
  u.outcome_count = 2;
  u.global_sensitivity = 1.0;
  u.evaluate = [](const Counts& x, int r) {
    return (database_size(x) % 2 == r) ? 1.0 : 0.0;
  };
  return u;
}

// percentile over the universe {1..9}; [5,5,5] is counts[4] = 3
Counts three_fives() {
  Counts x(9, 0);
  x[4] = 3;
  return x;
}

std::vector<double> universe_1_to_9() {
  return {1, 2, 3, 4, 5, 6, 7, 8, 9};
}

}  // namespace

TEST_CASE("ball enumeration covers the right number of candidates") {
  Counts x = {2, 1};
  auto ball = enumerate_ball(x, 1);
  // distance 0: itself; distance 1: two removals and two additions
  CHECK(ball.size() == 5);
  CHECK(ball_size(x, 1) == 5);
  for (const auto& [y, d] : ball) CHECK(d <= 1);
}

TEST_CASE("constant utility has zero sensitivity everywhere") {
  const UtilityModel u = constant_utility(3);
  const Counts x = {1, 2, 0};
  CHECK(local_sensitivity(u, x) == 0.0);
  CHECK(local_sensitivity_at_distance(u, x, 0) == 0.0);
  CHECK(local_sensitivity_at_distance(u, x, 2) == 0.0);
  const SmoothSensitivity s = smooth_sensitivity_bruteforce(u, x, 0.3);
  CHECK(s.value == 0.0);
  CHECK(s.witness_t == 0);
}

TEST_CASE("percentile local sensitivity threshold by brute force") {
  const UtilityModel u = percentile_utility_model(universe_1_to_9(), 50);
  // [5,5,5]: the median flips after 3 edits, so databases one edit short of a
  // flip appear at distance 2
  const Counts x = three_fives();
  CHECK(local_sensitivity_at_distance(u, x, 0) == 0.0);
  CHECK(local_sensitivity_at_distance(u, x, 1) == 0.0);
  CHECK(local_sensitivity_at_distance(u, x, 2) == 1.0);
  CHECK(local_sensitivity_at_distance(u, x, 3) == 1.0);

  PercentileInstance inst;
  inst.data = {5, 5, 5};
  inst.lambda = 9;
  inst.p = 50;
  inst.outcome_grid = universe_1_to_9();
  CHECK(percentile_flip_distance(inst) == 3);
  CHECK(percentile_local_sensitivity_at(inst, 0) == 0);
  CHECK(percentile_local_sensitivity_at(inst, 1) == 0);
  CHECK(percentile_local_sensitivity_at(inst, 2) == 1);
  CHECK(percentile_local_sensitivity_at(inst, 3) == 1);
}

TEST_CASE("local sensitivity at distance never exceeds the global sensitivity") {
  const UtilityModel u = percentile_utility_model({1, 2, 3, 4, 5}, 50);
  for (const Counts& x : {Counts{1, 0, 2, 0, 0}, Counts{0, 1, 1, 1, 0},
                          Counts{3, 0, 0, 0, 1}}) {
    for (int t = 0; t <= database_size(x); ++t) {
      CHECK(local_sensitivity_at_distance(u, x, t) <= u.global_sensitivity);
    }
  }
}

TEST_CASE("percentile utility attains global sensitivity one by brute force") {
  const UtilityModel u = percentile_utility_model({1, 2, 3, 4, 5}, 50);
  double worst = 0.0;
  Counts counts(5, 0);
  std::function<void(int, int)> sweep = [&](int coord, int remaining) {
    if (coord == 5) {
      worst = std::max(worst, local_sensitivity(u, counts));
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[static_cast<std::size_t>(coord)] = c;
      sweep(coord + 1, remaining - c);
    }
    counts[static_cast<std::size_t>(coord)] = 0;
  };
  sweep(0, 4);
  CHECK(worst == 1.0);
}

TEST_CASE("worst-case utility pins smooth sensitivity at t = 0") {
  const UtilityModel u = parity_utility();
  const Counts x = {2, 1};
  CHECK(local_sensitivity(u, x) == 1.0);
  const SmoothSensitivity s = smooth_sensitivity_bruteforce(u, x, 0.7);
  CHECK(s.value == 1.0);
  CHECK(s.witness_t == 0);
}

TEST_CASE("beta = 0 removes the attenuation") {
  const UtilityModel u = percentile_utility_model(universe_1_to_9(), 50);
  const SmoothSensitivity s = smooth_sensitivity_bruteforce(u, three_fives(), 0.0);
  CHECK(s.value == u.global_sensitivity);
}

TEST_CASE("percentile smooth sensitivity: brute force equals the analytic formula") {
  auto instance = [](std::vector<double> data) {
    PercentileInstance inst;
    inst.data = std::move(data);
    inst.lambda = 9;
    inst.p = 50;
    inst.outcome_grid = universe_1_to_9();
    return inst;
  };
  auto counts_of = [](const PercentileInstance& inst) {
    Counts c(9, 0);
    for (double v : inst.data) ++c[static_cast<std::size_t>(v) - 1];
    return c;
  };

  const UtilityModel u = percentile_utility_model(universe_1_to_9(), 50);
  for (const auto& data : std::vector<std::vector<double>>{
           {5, 5, 5},         // balanced run, flips after 3 edits
           {5, 5},            // asymmetric run, flips after 2
           {5, 5, 5, 5},      // left-heavy run, flips after 4
           {2, 5, 8},         // unique median, flips after 1
           {1, 5, 5, 5, 9},   // balanced run with flanks
           {5, 5, 9},         // run left of a flank
       }) {
    const PercentileInstance inst = instance(data);
    for (double beta : {0.1, 0.2, 0.7}) {
      const SmoothSensitivity brute =
          smooth_sensitivity_bruteforce(u, counts_of(inst), beta);
      const SmoothSensitivity analytic = percentile_smooth_sensitivity(inst, beta);
      CAPTURE(data);
      CHECK(analytic.value == doctest::Approx(brute.value).epsilon(1e-12));
      CHECK(analytic.witness_t == brute.witness_t);
    }
  }

  // the balanced [5,5,5] instance spelled out: flip after 3 edits, so the
  // attenuation reaches e^{-2 beta}
  const SmoothSensitivity s =
      smooth_sensitivity_bruteforce(u, three_fives(), 0.2);
  CHECK(s.value == doctest::Approx(std::exp(-0.4)).epsilon(1e-12));
  CHECK(s.witness_t == 2);
}

TEST_CASE("smooth sensitivity is bounded by the global sensitivity") {
  const UtilityModel u = percentile_utility_model({1, 2, 3, 4, 5}, 50);
  for (const Counts& x : {Counts{1, 1, 1, 0, 0}, Counts{0, 0, 4, 0, 0},
                          Counts{2, 0, 0, 0, 2}}) {
    for (double beta : {0.05, 0.2, 1.0}) {
      CHECK(smooth_sensitivity_bruteforce(u, x, beta).value <=
            u.global_sensitivity + 1e-12);
    }
  }
}

TEST_CASE("smooth sensitivity is nonincreasing in beta") {
  const UtilityModel u = percentile_utility_model(universe_1_to_9(), 50);
  const Counts x = three_fives();
  double prev = 2.0;
  for (double beta : {0.0, 0.1, 0.3, 0.8, 2.0}) {
    const double v = smooth_sensitivity_bruteforce(u, x, beta).value;
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
}

TEST_CASE("analytic path is used when the model provides one") {
  UtilityModel u = percentile_utility_model(universe_1_to_9(), 50);
  u.smooth = [](const Counts&, double beta) {
    return SmoothSensitivity{0.123, beta, 7};
  };
  const SmoothSensitivity s = smooth_sensitivity(u, three_fives(), 0.4);
  CHECK(s.value == 0.123);
  CHECK(s.witness_t == 7);
}

TEST_CASE("smooth bound verification over small percentile universes") {
  const std::vector<double> universe = {1, 2, 3, 4, 5};
  const UtilityModel u = percentile_utility_model(universe, 50);

  SUBCASE("the exhaustive smooth sensitivity is a valid bound") {
    const double beta = 0.25;
    const auto report = verify_smooth_bound(
        u,
        [&](const Counts& x) {
          return smooth_sensitivity_bruteforce(u, x, beta).value;
        },
        beta, static_cast<int>(universe.size()), 4);
    CHECK(report.databases_checked > 0);
    CHECK(report.passed());
  }

  SUBCASE("the constant global-sensitivity bound is valid") {
    const auto report = verify_smooth_bound(
        u, [&](const Counts&) { return u.global_sensitivity; }, 0.25,
        static_cast<int>(universe.size()), 4);
    CHECK(report.passed());
  }

  SUBCASE("the raw local sensitivity is not a smooth bound") {
    const auto report = verify_smooth_bound(
        u, [&](const Counts& x) { return local_sensitivity(u, x); }, 0.25,
        static_cast<int>(universe.size()), 4);
    CHECK_FALSE(report.passed());
    bool ratio_violation = false;
    for (const auto& v : report.violations) {
      if (v.kind == "neighbor_ratio") ratio_violation = true;
    }
    CHECK(ratio_violation);
  }
}

TEST_CASE("neighbor ratio property of the smooth sensitivity itself") {
  const std::vector<double> universe = {1, 2, 3};
  const UtilityModel u = percentile_utility_model(universe, 50);
  const double beta = 0.3;
  // S(x) <= e^beta S(y) for every neighbor pair of small databases
  const auto report = verify_smooth_bound(
      u,
      [&](const Counts& x) {
        return smooth_sensitivity_bruteforce(u, x, beta).value;
      },
      beta, 3, 5);
  CHECK(report.passed());
  CHECK(report.pairs_checked > 100);
}

TEST_CASE("enumeration guard rejects oversized balls") {
  const UtilityModel u = constant_utility(2);
  Counts huge(40, 3);  // 120 records over a 40-element universe
  CHECK_THROWS_AS(local_sensitivity_at_distance(u, huge, 12),
                  std::runtime_error);
}

TEST_CASE("serial and parallel brute force agree exactly") {
  const UtilityModel u = percentile_utility_model(universe_1_to_9(), 50);
  const Counts x = three_fives();
  const SmoothSensitivity serial =
      smooth_sensitivity_bruteforce(u, x, 0.2, par::Mode::kSerial);
  const SmoothSensitivity parallel =
      smooth_sensitivity_bruteforce(u, x, 0.2, par::Mode::kOpenMP);
  CHECK(serial.value == parallel.value);
  CHECK(serial.witness_t == parallel.witness_t);
}
