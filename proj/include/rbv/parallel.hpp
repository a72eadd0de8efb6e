#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rbv::parallel {

namespace detail {
inline std::atomic<int>& thread_count_storage() {
  static std::atomic<int> count{1};
  return count;
}
}  // namespace detail

/// Worker count used by every parallel loop in the library. Results never
/// depend on it: loops write into pre-sized slots and reductions run serially.
inline void set_thread_count(int n) { detail::thread_count_storage().store(std::max(1, n)); }
inline int thread_count() { return detail::thread_count_storage().load(); }

/// Calls body(i) for i in [0, n). Work is split into contiguous chunks; the
/// first exception thrown by any worker is rethrown on the caller.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const auto workers = static_cast<std::size_t>(thread_count());
  if (workers <= 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t used = std::min(workers, n);
  const std::size_t chunk = (n + used - 1) / used;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(used);
  for (std::size_t t = 0; t < used; ++t) {
    pool.emplace_back([&, t] {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn) {
  std::vector<T> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace rbv::parallel
