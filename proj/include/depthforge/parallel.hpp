#pragma once

#include <omp.h>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

namespace depthforge {

/// Every hot loop has a parallel (OpenMP) path and a plain serial path.
/// The serial path is the reference the tests compare against; both must
/// produce identical results whatever the thread count.
enum class Exec { Serial, Parallel };

/// Sets the OpenMP thread count used by Exec::Parallel loops.
void set_thread_count(int n);
int thread_count();

/// Thread count from an explicit flag, else DEPTHFORGE_THREADS, else the
/// hardware concurrency.
int resolve_thread_count(std::optional<int> flag);

/// Calls body(i) for i in [0, n). Iterations must be independent.
template <class Body>
void parallel_for(Exec exec, std::int64_t n, Body&& body, int chunk = 64) {
  if (exec == Exec::Serial || n < 2) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
#pragma omp parallel for schedule(dynamic, chunk)
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

/// Sum of term(i) over [0, n) using fixed-size blocks whose partial sums are
/// combined in block order, so the result does not depend on the number of
/// threads.
template <class Term>
double deterministic_sum(Exec exec, std::int64_t n, Term&& term, std::int64_t block = 4096) {
  const std::int64_t nblocks = (n + block - 1) / block;
  std::vector<double> partial(static_cast<std::size_t>(nblocks), 0.0);
  parallel_for(
      exec, nblocks,
      [&](std::int64_t b) {
        const std::int64_t lo = b * block;
        const std::int64_t hi = std::min(n, lo + block);
        double s = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) s += term(i);
        partial[static_cast<std::size_t>(b)] = s;
      },
      1);
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

}  // namespace depthforge
