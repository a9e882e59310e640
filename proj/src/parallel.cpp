#include "snm/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace snm::par {

void apply_thread_cap() {
#ifdef _OPENMP
  const char* env = std::getenv("DP_SELECT_THREADS");
  if (env == nullptr) return;
  try {
    int cap = std::stoi(env);
    if (cap >= 1) omp_set_num_threads(cap);
  } catch (...) {
    // malformed value: keep the OpenMP default
  }
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace snm::par
