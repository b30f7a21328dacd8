#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace mskm {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

// Runs fn(begin, end) over disjoint contiguous chunks of [0, n). Each output
// element must be written by exactly one chunk, so results do not depend on
// the thread count.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n < 2048) {
    fn(std::size_t(0), n);
    return;
  }
  const std::size_t nchunks = std::min<std::size_t>(std::size_t(threads), n);
  const std::size_t chunk = (n + nchunks - 1) / nchunks;
  std::vector<std::thread> pool;
  pool.reserve(nchunks);
  for (std::size_t c = 0; c < nchunks; ++c) {
    const std::size_t b = c * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mskm
