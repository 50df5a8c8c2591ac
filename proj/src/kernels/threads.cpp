#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

#include "sdjscc/kernels.hpp"

namespace sdjscc::kernels {

int configure_threads(int requested) {
  int n = requested > 0 ? requested : omp_get_num_procs();
  if (const char* env = std::getenv("SDJSCC_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  n = std::max(n, 1);
  omp_set_num_threads(n);
  return n;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace sdjscc::kernels
