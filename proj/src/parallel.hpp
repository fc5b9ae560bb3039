#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace refpr::detail {

/// Runs body(worker, index) for index in [0, count) on up to
/// hardware_concurrency threads. Each index runs exactly once; callers write
/// results into per-index slots and reduce in index order afterwards, so the
/// outcome never depends on scheduling. The first exception is rethrown.
template <typename Body>
void parallel_for(std::size_t count, std::size_t max_workers, Body&& body) {
  std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min({workers, count, std::max<std::size_t>(1, max_workers)});
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(std::size_t{0}, i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      // Static interleaved partition.
      for (std::size_t i = w; i < count; i += workers) {
        try {
          body(w, i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::size_t worker_count(std::size_t count) {
  return std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()),
                               std::max<std::size_t>(1, count));
}

}  // namespace refpr::detail
