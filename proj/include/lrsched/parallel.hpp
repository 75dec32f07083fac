#pragma once

// Fixed-size worker pool over an index range. Results land at their input
// index, so output order never depends on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace lrsched {

inline std::size_t default_jobs() {
  auto n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

/// Calls fn(i) for i in [0, count) on up to `jobs` threads. Each slot of the
/// returned vector holds the exception thrown by fn(i), or null.
inline std::vector<std::exception_ptr> parallel_for(std::size_t count, std::size_t jobs,
                                                    const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (jobs == 1) {
    worker();
    return errors;
  }
  std::vector<std::jthread> pool;
  pool.reserve(jobs);
  for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  pool.clear();  // joins
  return errors;
}

}  // namespace lrsched
