#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace renderworld {

/// Runs fn(i) for i in [0, count) on at most max_workers threads. The first
/// exception (by index) is rethrown after all workers finish.
inline void parallel_for(std::size_t count, int max_workers, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(max_workers, 1)), 1, count);
  std::vector<std::exception_ptr> errors(count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < count; i = next++) {
            try {
              fn(i);
            } catch (...) {
              errors[i] = std::current_exception();
            }
          }
        });
      }
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace renderworld
