#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace spinsim {

/// Number of worker threads: SPINSIM_THREADS if set, otherwise hardware concurrency.
int worker_count();

/// Runs body(i) for i in [0, count) on a strided thread pool. Bodies must write to
/// disjoint slots so results do not depend on scheduling.
template <typename F>
void parallel_for(int count, F&& body) {
  const int workers = std::min(worker_count(), std::max(count, 1));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < count; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace spinsim
