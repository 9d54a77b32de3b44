#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace trimode {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(begin, end) on contiguous chunks of [0, n) across worker threads.
/// fn must not touch shared mutable state outside its own chunk.
template <class Fn>
void parallel_for_chunks(std::int64_t n, int threads, Fn&& fn) {
  threads = std::min<std::int64_t>(resolve_threads(threads), std::max<std::int64_t>(n, 1));
  if (threads <= 1 || n < 2) {
    fn(std::int64_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::int64_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::int64_t begin = t * chunk;
    const std::int64_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace trimode
