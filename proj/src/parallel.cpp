#include "navee/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace navee {

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int apply_thread_env() {
  if (const char* value = std::getenv(kThreadsEnv)) {
    try {
      const int n = std::stoi(value);
      if (n > 0) set_threads(n);
    } catch (const std::exception&) {
      // ignored: an unparsable value leaves the OpenMP default in place
    }
  }
  return max_threads();
}

}  // namespace navee
