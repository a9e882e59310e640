#pragma once

#include <cstdint>
#include <vector>

#include "snm/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace snm::par {

// Every data-parallel kernel in this project comes in two flavours selected
// by Mode: a plain serial loop (the reference used by the tests) and an
// OpenMP version. Both produce identical results because each loop iteration
// derives its own RNG stream from (base seed, index) and reductions are
// order-independent (integer counts, max).
enum class Mode { kSerial, kOpenMP };

// Honors the DP_SELECT_THREADS environment variable; call once at startup.
void apply_thread_cap();

int thread_count();

// Runs `trials` independent selections, each seeded from base.split(trial),
// and tallies outcomes into a histogram. run_one(Rng&) -> outcome index.
template <class RunOne>
std::vector<std::int64_t> count_outcomes(std::int64_t trials, int n_outcomes,
                                         const Rng& base, RunOne&& run_one,
                                         Mode mode = Mode::kOpenMP) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(n_outcomes), 0);
  if (mode == Mode::kSerial) {
    for (std::int64_t i = 0; i < trials; ++i) {
      Rng r = base.split(static_cast<std::uint64_t>(i));
      ++counts[static_cast<std::size_t>(run_one(r))];
    }
    return counts;
  }
#ifdef _OPENMP
#pragma omp parallel
  {
    std::vector<std::int64_t> local(static_cast<std::size_t>(n_outcomes), 0);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < trials; ++i) {
      Rng r = base.split(static_cast<std::uint64_t>(i));
      ++local[static_cast<std::size_t>(run_one(r))];
    }
#pragma omp critical
    {
      for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += local[k];
    }
  }
  return counts;
#else
  for (std::int64_t i = 0; i < trials; ++i) {
    Rng r = base.split(static_cast<std::uint64_t>(i));
    ++counts[static_cast<std::size_t>(run_one(r))];
  }
  return counts;
#endif
}

// Maximum of fn(i) over i in [0, n). Used by the brute-force sensitivity
// enumeration; max is order-independent so both modes agree bit-for-bit.
template <class Fn>
double max_over(std::int64_t n, Fn&& fn, Mode mode = Mode::kOpenMP) {
  double best = 0.0;
  if (mode == Mode::kSerial) {
    for (std::int64_t i = 0; i < n; ++i) {
      double v = fn(i);
      if (v > best) best = v;
    }
    return best;
  }
#ifdef _OPENMP
#pragma omp parallel
  {
    double local = 0.0;
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      double v = fn(i);
      if (v > local) local = v;
    }
#pragma omp critical
    {
      if (local > best) best = local;
    }
  }
  return best;
#else
  for (std::int64_t i = 0; i < n; ++i) {
    double v = fn(i);
    if (v > best) best = v;
  }
  return best;
#endif
}

}  // namespace snm::par
