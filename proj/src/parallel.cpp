#include "frontlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace frontlab {
namespace {

int default_threads() {
  int threads = 1;
#if defined(_OPENMP)
  threads = omp_get_max_threads();
#endif
  if (const char* env = std::getenv("FRONTLAB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) threads = std::min(threads, cap);
  }
  return std::max(threads, 1);
}

std::atomic<int>& slot() {
  static std::atomic<int> threads{default_threads()};
  return threads;
}

}  // namespace

int max_threads() { return slot().load(std::memory_order_relaxed); }

void set_max_threads(int threads) {
  slot().store(std::max(threads, 1), std::memory_order_relaxed);
}

}  // namespace frontlab
