#pragma once

// Deterministic random numbers on top of std::mt19937_64. The uniform and
// shuffle routines are written out explicitly because std::uniform_*
// distributions and std::shuffle may differ across standard libraries; the
// raw mt19937_64 sequence itself is fixed by the standard.

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace twmlp {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  /// Uniform integer in [0, n); n must be positive. Uses rejection-free
  /// scaling via the 53-bit uniform, adequate for the small n used here.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  /// In-place Fisher-Yates shuffle with a fixed visitation order.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace twmlp
