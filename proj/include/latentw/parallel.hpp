#ifndef LATENTW_PARALLEL_HPP
#define LATENTW_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace latentw {

/// Worker count used when a caller passes 0: LATENTW_THREADS if set,
/// otherwise the hardware concurrency.
unsigned default_threads();

inline unsigned resolve_threads(unsigned threads) { return threads == 0 ? default_threads() : threads; }

/// Calls fn(i) for i in [0, count) on up to `threads` workers using contiguous
/// static blocks. Each index must write only its own output slot; results are
/// then independent of the worker count. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(resolve_threads(threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = count * w / workers;
      const std::size_t end = count * (w + 1) / workers;
      pool.emplace_back([&, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i) fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace latentw

#endif  // LATENTW_PARALLEL_HPP
