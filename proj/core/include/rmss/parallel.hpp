#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace rmss {

// Default worker count: RMSS_THREADS environment variable if set and
// positive, otherwise the hardware concurrency.
inline int default_thread_count() {
  if (const char* env = std::getenv("RMSS_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

// Runs fn(i) for i in [0, n_items) over a static partition of the index
// range. Each index is processed exactly once and writes only to its own
// output slot in calling code, so results do not depend on the thread count.
inline void parallel_for(int n_items, int n_threads,
                         const std::function<void(int)>& fn) {
  if (n_items <= 0) return;
  if (n_threads <= 1 || n_items == 1) {
    for (int i = 0; i < n_items; ++i) fn(i);
    return;
  }
  int workers = std::min(n_threads, n_items);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      int lo = static_cast<int>(static_cast<long long>(n_items) * w / workers);
      int hi =
          static_cast<int>(static_cast<long long>(n_items) * (w + 1) / workers);
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace rmss
