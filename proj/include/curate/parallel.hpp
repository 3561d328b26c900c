#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace curate {

/// Runs body(i) for every i in [0, n) on up to `workers` threads. Work is
/// handed out in fixed-size chunks; callers write results by index, so the
/// output is independent of scheduling. The exception raised at the lowest
/// index (if any) is rethrown after all threads join.
template <class Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body, std::size_t chunk = 16) {
  if (n == 0) return;
  workers = std::max<std::size_t>(1, std::min(workers, (n + chunk - 1) / chunk));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> cursor{0};
  std::mutex err_mu;
  std::exception_ptr first_err;
  std::size_t first_err_index = n;

  auto run = [&] {
    for (;;) {
      const std::size_t begin = cursor.fetch_add(chunk);
      if (begin >= n) return;
      const std::size_t end = std::min(n, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (i < first_err_index) {
            first_err_index = i;
            first_err = std::current_exception();
          }
        }
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (first_err) std::rethrow_exception(first_err);
}

template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, std::size_t workers, Fn&& fn) {
  std::vector<T> out(n);
  parallel_for(n, workers, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace curate
