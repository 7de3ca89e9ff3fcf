#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace coupled_elast {

/// Worker count: COUPLED_ELAST_THREADS caps the hardware concurrency.
inline int default_thread_count() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("COUPLED_ELAST_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) n = std::min(n, cap);
    } catch (const std::exception&) {
    }
  }
  return n;
}

/// Splits [0, n) into `threads` contiguous chunks and runs fn(chunk, begin, end)
/// for each. Chunk c always covers the same range for a given (n, threads), so
/// per-chunk results concatenated in chunk order are independent of scheduling.
template <class Fn>
void parallel_chunks(int n, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (int c = 0; c < threads; ++c) {
    const int begin = static_cast<int>(static_cast<long long>(n) * c / threads);
    const int end = static_cast<int>(static_cast<long long>(n) * (c + 1) / threads);
    pool.emplace_back([&, c, begin, end] {
      try {
        fn(c, begin, end);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace coupled_elast
