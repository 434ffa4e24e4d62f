#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace docparse {

// Runs fn(0..n-1) on up to `workers` threads, pulling indices from a shared
// counter. The first exception thrown by any job is rethrown on the caller
// after all threads join.
inline void parallel_for(size_t n, int workers,
                         const std::function<void(size_t)>& fn) {
  if (n == 0) return;
  int count = workers < 1 ? 1 : static_cast<int>(std::min<size_t>(workers, n));
  if (count == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(count);
  for (int w = 0; w < count; ++w) {
    pool.emplace_back([&, w] {
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          if (!errors[w]) errors[w] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace docparse
