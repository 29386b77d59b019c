#pragma once

#include <atomic>
#include <cstdint>

namespace onebit {

// Process-wide record of the largest single matrix allocation, in elements.
// The solver's memory contract forbids materializing the dilated operator;
// tests reset this, run a step, and inspect the high-water mark.
struct AllocStats {
  static void record(std::uint64_t elems) {
    std::uint64_t prev = largest_block_.load(std::memory_order_relaxed);
    while (prev < elems && !largest_block_.compare_exchange_weak(
                               prev, elems, std::memory_order_relaxed)) {
    }
  }
  static void reset() { largest_block_.store(0, std::memory_order_relaxed); }
  static std::uint64_t largest_block() {
    return largest_block_.load(std::memory_order_relaxed);
  }

 private:
  static inline std::atomic<std::uint64_t> largest_block_{0};
};

}  // namespace onebit
