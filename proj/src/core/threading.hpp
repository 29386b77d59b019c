#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "core/error.hpp"

namespace onebit {

/// Worker count, read from ONEBIT_THREADS each call. Defaults to 1.
inline Index thread_count() {
  const char* env = std::getenv("ONEBIT_THREADS");
  if (env == nullptr) return 1;
  const long v = std::strtol(env, nullptr, 10);
  if (v < 1) return 1;
  if (v > 256) return 256;
  return static_cast<Index>(v);
}

/// Runs fn(chunk_index, begin, end) over [0, n) split into fixed chunks of
/// chunk_size items. The chunk grid depends only on n and chunk_size, never
/// on the worker count, and each chunk must write to disjoint outputs (or to
/// a per-chunk partial indexed by chunk_index); under that contract results
/// are bit-identical for any ONEBIT_THREADS value.
inline void parallel_chunks(
    Index n, Index chunk_size,
    const std::function<void(Index, Index, Index)>& fn) {
  if (n <= 0) return;
  const Index n_chunks = (n + chunk_size - 1) / chunk_size;
  const Index workers = std::min<Index>(thread_count(), n_chunks);
  if (workers <= 1) {
    for (Index c = 0; c < n_chunks; ++c) {
      fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
    }
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  for (Index w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const Index c = next.fetch_add(1, std::memory_order_relaxed);
        if (c >= n_chunks || failed.load(std::memory_order_relaxed)) break;
        try {
          fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!failed.exchange(true)) first_error = std::current_exception();
          break;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed) std::rethrow_exception(first_error);
}

/// Default chunk width for per-instance work.
inline constexpr Index kChunkSize = 16384;

}  // namespace onebit
