// Compares the serial reference replicate loop against the OpenMP one on a
// representative workload: simulate + fit + exact risk for a 2-d LDS cell.
#include <chrono>
#include <cstdio>
#include <vector>

#include "tslab/estimators.hpp"
#include "tslab/parallel.hpp"
#include "tslab/processes.hpp"
#include "tslab/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double run_cell(int n_rep, std::size_t T, int threads, double* checksum) {
  tslab::Matrix A(2, 2);
  A << 0.8, 0.1, 0.0, 0.7;
  const tslab::LdsSpec spec = tslab::LdsSpec::make(A, tslab::Matrix::Identity(2, 2));
  std::vector<double> risks(static_cast<std::size_t>(n_rep));
  const auto start = Clock::now();
  tslab::parallel_for(
      static_cast<std::size_t>(n_rep),
      [&](std::size_t r) {
        const auto batch = tslab::simulate_lds(spec, T, tslab::derive_stream(1234, r));
        const auto fit = tslab::lse_linear(batch, 4.0);
        const auto& Ahat = std::get<tslab::LinearMember>(fit.parameter).A;
        risks[r] = (Ahat - A).squaredNorm();
      },
      threads);
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  double acc = 0.0;
  for (double v : risks) acc += v;
  *checksum = acc;
  return secs;
}

}  // namespace

int main() {
  const int n_rep = 2000;
  const std::size_t T = 4096;
  double check_serial = 0.0, check_parallel = 0.0;

  run_cell(64, 1024, 1, &check_serial);  // warm-up
  const double t_serial = run_cell(n_rep, T, 1, &check_serial);
  const double t_parallel = run_cell(n_rep, T, 0, &check_parallel);

  std::printf("replicates=%d T=%zu\n", n_rep, T);
  std::printf("serial reference: %.3f s\n", t_serial);
  std::printf("openmp (default threads): %.3f s  speedup %.2fx\n", t_parallel,
              t_serial / t_parallel);
  std::printf("checksums: serial=%.17g parallel=%.17g %s\n", check_serial, check_parallel,
              check_serial == check_parallel ? "(identical)" : "(MISMATCH)");
  return check_serial == check_parallel ? 0 : 1;
}
