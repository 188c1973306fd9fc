#pragma once

// Row-parallel loops. Every parallel region writes disjoint outputs, so
// results do not depend on the thread count. Reductions stay sequential.

namespace frontlab {

/// Worker cap: FRONTLAB_THREADS when set, else the OpenMP default.
int max_threads();
void set_max_threads(int threads);

template <class F>
void parallel_for(int begin, int end, F&& body) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (int k = begin; k < end; ++k) body(k);
#else
  for (int k = begin; k < end; ++k) body(k);
#endif
}

}  // namespace frontlab
