#ifndef TSLAB_PARALLEL_HPP
#define TSLAB_PARALLEL_HPP

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tslab {

// Serial reference loop. parallel_for(n, body, 1) routes here; tests compare
// its output bitwise against the OpenMP path.
template <class F>
void serial_for(std::size_t n, F&& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs body(i) for i in [0, n). Each body call must be independent given its
// index (derive per-index RNG streams; write only to slot i of preallocated
// output), so results cannot depend on scheduling. threads == 1 forces the
// serial reference path; threads <= 0 uses the OpenMP default.
template <class F>
void parallel_for(std::size_t n, F&& body, int threads = 0) {
#ifdef _OPENMP
  if (threads == 1 || n <= 1) {
    serial_for(n, body);
    return;
  }
  const long long nn = static_cast<long long>(n);
  if (threads > 0) {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long long i = 0; i < nn; ++i) body(static_cast<std::size_t>(i));
  } else {
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < nn; ++i) body(static_cast<std::size_t>(i));
  }
#else
  (void)threads;
  serial_for(n, body);
#endif
}

}  // namespace tslab

#endif  // TSLAB_PARALLEL_HPP
