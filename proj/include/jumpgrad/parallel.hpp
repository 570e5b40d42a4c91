// Replication fan-out. Replications are embarrassingly parallel: each one
// draws from streams keyed by its own index and writes results into its own
// slot, so outputs are identical for any worker count. A serial reference
// path is kept alongside the OpenMP one and exercised by the tests and the
// throughput benchmark.
#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace jumpgrad {

// fn(replication_index) for indices [0, n). workers: 0 = library default,
// 1 = force serial, k > 1 = that many OpenMP threads.
template <class F>
void for_each_replication_serial(std::size_t n, F&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

template <class F>
void for_each_replication(std::size_t n, int workers, F&& fn) {
#ifdef _OPENMP
  if (workers != 1) {
    std::exception_ptr error;
    std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers > 1 ? workers : omp_get_max_threads())
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      try {
        fn(static_cast<std::size_t>(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    return;
  }
#else
  (void)workers;
#endif
  for_each_replication_serial(n, std::forward<F>(fn));
}

}  // namespace jumpgrad
