#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdlib>

namespace mbpm {

/// Worker count for the parallel kernels; MBPM_THREADS caps it when set.
inline int thread_cap() {
#ifdef _OPENMP
  int n = omp_get_max_threads();
#else
  int n = 1;
#endif
  if (const char* env = std::getenv("MBPM_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1 && cap < n) n = cap;
  }
  return n;
}

}  // namespace mbpm
