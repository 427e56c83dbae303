#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace posedist {

/// Number of worker threads to use for `requested` (<= 0 means all cores).
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Splits [0, n) into contiguous chunks, one per thread. `fn(begin, end)` must
/// only write to disjoint, index-addressed outputs so the result does not
/// depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  int t = std::max(1, std::min<int>(resolve_threads(threads), static_cast<int>(n)));
  if (t <= 1) {
    if (n > 0) fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t);
  std::size_t chunk = (n + t - 1) / t;
  for (int i = 0; i < t; ++i) {
    std::size_t begin = i * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace posedist
