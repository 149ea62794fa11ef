#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace nngp {

/// Number of workers to use for a requested thread count (0 = hardware).
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Run fn(begin, end, block_index) over contiguous blocks of [0, n). The
/// partition depends only on (n, n_threads), so any writes indexed by item or
/// block are deterministic regardless of scheduling. The first exception
/// (lowest block) is rethrown.
template <typename Fn>
void parallel_for_blocks(std::size_t n, int n_threads, Fn&& fn) {
  n_threads = static_cast<int>(
      std::min<std::size_t>(resolve_threads(n_threads), std::max<std::size_t>(n, 1)));
  if (n_threads <= 1 || n <= 1) {
    fn(std::size_t{0}, n, 0);
    return;
  }
  const std::size_t block = (n + n_threads - 1) / n_threads;
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    const std::size_t begin = std::min(n, static_cast<std::size_t>(t) * block);
    const std::size_t end = std::min(n, begin + block);
    if (begin >= end) break;
    workers.emplace_back([&, t, begin, end] {
      try {
        fn(begin, end, t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace nngp
