#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace henon {

// Splits [0, n) into `threads` contiguous chunks and runs fn(chunk, begin, end)
// on each.  Chunk boundaries depend only on n and threads; callers that merge
// per-chunk results in chunk order get thread-count independent output as long
// as per-item work is pure.
template <class Fn>
void parallel_chunks(std::size_t n, int threads, Fn&& fn) {
  std::size_t t = static_cast<std::size_t>(std::max(1, threads));
  t = std::min(t, std::max<std::size_t>(1, n));
  if (t == 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex mu;
  for (std::size_t c = 0; c < t; ++c) {
    std::size_t b = n * c / t, e = n * (c + 1) / t;
    pool.emplace_back([&, c, b, e] {
      try {
        fn(c, b, e);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

inline int chunk_count(std::size_t n, int threads) {
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), std::max<std::size_t>(1, n)));
}

}  // namespace henon
