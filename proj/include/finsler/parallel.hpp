#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace finsler {

/// Runs body(begin, end) over contiguous slices of [0, n) on up to `threads`
/// threads. Slices are disjoint, so bodies that only write their own slice
/// produce the same result for every thread count. The exception of the
/// lowest failing slice is rethrown after all threads have joined.
template <class Body>
void parallel_for(int n, int threads, Body&& body) {
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    body(0, n);
    return;
  }
  const int chunk = (n + threads - 1) / threads;
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      const int b = t * chunk;
      const int e = std::min(n, b + chunk);
      if (b >= e) break;
      pool.emplace_back([&body, &errors, t, b, e] {
        try {
          body(b, e);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace finsler
