// Throughput benchmark: the OpenMP replication fan-out against the serial
// reference, on generator-gradient sampling of the canonical LQ model.
// Prints a CSV (mode,workers,samples,seconds,samples_per_second,speedup) to
// stdout and verifies along the way that every mode produces bit-identical
// sample values.
//
// Usage: bench_replication [n_samples] [max_workers]

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "jumpgrad/estimators.hpp"
#include "jumpgrad/parallel.hpp"
#include "jumpgrad/zoo.hpp"

using namespace jumpgrad;

namespace {

double now() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 200;
#ifdef _OPENMP
  const int max_workers = argc > 2 ? std::atoi(argv[2]) : omp_get_max_threads();
#else
  const int max_workers = 1;
#endif

  const zoo::LqSpec spec = zoo::default_lq(102, 42);
  const ModelSpec model = zoo::build_lq(spec);
  est::EstimatorConfig ec;
  ec.sim.n_steps = 400;
  ec.randomize_reward_integral = true;

  std::cout << "mode,workers,samples,seconds,samples_per_second,speedup\n";

  std::vector<est::SampleDraw> reference(n), out(n);
  double t0 = now();
  for_each_replication_serial(n, [&](std::size_t r) {
    reference[r] = est::gg_sample(model, spec.x0, ec, r);
  });
  const double serial_s = now() - t0;
  std::cout << "serial,1," << n << "," << serial_s << "," << n / serial_s << ",1\n";

  for (int w = 1; w <= max_workers; w *= 2) {
    t0 = now();
    for_each_replication(n, w, [&](std::size_t r) {
      out[r] = est::gg_sample(model, spec.x0, ec, r);
    });
    const double s = now() - t0;
    for (std::size_t r = 0; r < n; ++r) {
      if (out[r].gradient != reference[r].gradient) {
        std::cerr << "MISMATCH against serial reference at replication " << r << "\n";
        return 1;
      }
    }
    std::cout << "openmp," << w << "," << n << "," << s << "," << n / s << ","
              << serial_s / s << "\n";
  }
  return 0;
}
