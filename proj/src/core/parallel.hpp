#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace anovanet {

// Deterministic parallel map: body(i) must write only to slot i of some
// preallocated output, so results are independent of scheduling. With
// threads <= 1 this degenerates to a plain loop.
inline void parallel_for(long count, int threads,
                         const std::function<void(long)>& body) {
  if (count <= 0) return;
  if (threads <= 1 || count == 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  const int workers = static_cast<int>(
      std::min<long>(threads, count));
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const long i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) return;
        body(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

inline int hardware_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace anovanet
