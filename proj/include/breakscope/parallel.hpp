#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace breakscope {

// Worker count: BREAKSCOPE_THREADS overrides the request, else hardware.
inline int resolve_threads(int requested) {
  if (const char* env = std::getenv("BREAKSCOPE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n).  Work is striped across threads so long tasks
// cluster less; results must be written to caller-owned slots indexed by i,
// which keeps the aggregate independent of scheduling.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::min(resolve_threads(threads), n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([=, &fn] {
      for (int i = w; i < n; i += threads) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace breakscope
