#pragma once

/*
 * Minimal deterministic work splitting.  Callers partition an index range
 * into contiguous chunks, one worker thread per chunk; results must be
 * combined in index order (or via commutative reductions) so the output is
 * independent of the worker count.
 */

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace renorm {

/// Worker count: RENORM_SKEW_THREADS when set to a positive integer,
/// otherwise the hardware concurrency (at least 1).
inline int thread_count() {
  if (const char* env = std::getenv("RENORM_SKEW_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Run body(begin, end, worker_index) over a partition of [0, n) into at most
/// `workers` contiguous chunks.  The body must only touch worker-local state
/// indexed by worker_index.  Exceptions are rethrown on the calling thread.
template <class Body>
void parallel_chunks(std::int64_t n, Body&& body, int workers = 0) {
  if (n <= 0) return;
  if (workers <= 0) workers = thread_count();
  workers = static_cast<int>(std::min<std::int64_t>(workers, n));
  if (workers == 1) {
    body(std::int64_t{0}, n, 0);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  const std::int64_t per = n / workers, rem = n % workers;
  std::int64_t at = 0;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t len = per + (w < rem ? 1 : 0);
    const std::int64_t begin = at, end = at + len;
    at = end;
    threads.emplace_back([&, begin, end, w] {
      try {
        body(begin, end, w);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace renorm
