#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace evcs {

/// Environment variable capping the worker count.
inline constexpr const char* kThreadsEnvVar = "EVCS_THREADS";

/// requested > 0 wins; otherwise hardware concurrency, capped by EVCS_THREADS when set.
inline int resolve_thread_count(int requested = 0) {
  if (requested > 0) return requested;
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* env = std::getenv(kThreadsEnvVar)) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0) return std::min(cap, hw);
    } catch (const std::exception&) {
    }
  }
  return hw;
}

/// Calls body(i) for i in [0, count). Each index is handled exactly once; results
/// must be written to index-addressed slots so the outcome is schedule independent.
/// If bodies throw, the exception from the lowest index is rethrown.
template <class Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
  const int workers = static_cast<int>(std::min<std::size_t>(count, static_cast<std::size_t>(resolve_thread_count(threads))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::size_t first_error_index = count;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (i < first_error_index) {
              first_error_index = i;
              first_error = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace evcs
