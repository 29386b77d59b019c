#pragma once

#include <cmath>
#include <cstdint>

namespace onebit {

// Stream purposes. Every random draw in the library comes from a stream keyed
// by (seed, purpose, major, minor), so any instance/column can be generated
// independently of all others and of the thread schedule.
enum class Rng : std::uint64_t {
  ground_truth = 1,
  batch_x = 2,
  batch_class = 3,
  noise_flip = 4,
  noise_gauss = 5,
  full_x = 6,
  power_init = 7,
  spectral = 8,
  eval_x = 9,
  mc = 10,
  perturb = 11,
  misc = 12,
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}
}  // namespace detail

/// Counter-based pseudo-random stream (splitmix64). Construction derives an
/// independent stream key from (seed, purpose, major, minor); draws then walk
/// a counter through the mixing function. Gaussian variates use Box-Muller on
/// 53-bit uniforms; this choice is fixed because outputs are a compatibility
/// contract (identical seeds must reproduce identical experiments).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Rng purpose, std::uint64_t major,
             std::uint64_t minor) {
    std::uint64_t k = detail::mix64(seed + 0x9e3779b97f4a7c15ULL);
    k = detail::mix64(k ^ (static_cast<std::uint64_t>(purpose) * 0xff51afd7ed558ccdULL));
    k = detail::mix64(k ^ (major + 0x2545f4914f6cdd1dULL));
    k = detail::mix64(k ^ (minor + 0x9e3779b97f4a7c15ULL));
    state_ = k;
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(state_);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal variate.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = next_double();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, n). Bias is below 1e-13 for n < 2^20.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Derives a child seed, used to give each batch/run its own seed space.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return detail::mix64(detail::mix64(seed ^ 0xd1b54a32d192ed03ULL) + index);
}

}  // namespace onebit
