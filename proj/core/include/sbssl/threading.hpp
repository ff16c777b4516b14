#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace sbssl {

/// Runs fn(i) for i in [0, n) on `workers` threads. Each index is handled by
/// exactly one thread and writes only to its own output slot, so results are
/// identical for any worker count. workers <= 1 runs inline.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t lanes = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::thread> pool;
  pool.reserve(lanes);
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    pool.emplace_back([lane, lanes, n, &fn] {
      for (std::size_t i = lane; i < n; i += lanes) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace sbssl
