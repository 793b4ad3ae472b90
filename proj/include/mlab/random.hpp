#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace mlab {

/// splitmix64 finalizer. Used both as a counter hash (projection entries)
/// and as the state transition of SplitMix64 below.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Hash of a (seed, a, b) counter triple. Every stage adds a distinct odd
/// constant so that zero inputs do not collapse.
/// hash3 split in two stages so loops over b can reuse the (seed, a) prefix.
constexpr std::uint64_t hash3_head(std::uint64_t seed, std::uint64_t a) noexcept {
  const std::uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ULL);
  return mix64(h ^ (a * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL));
}
constexpr std::uint64_t hash3_tail(std::uint64_t head, std::uint64_t b) noexcept {
  return mix64(head ^ (b * 0x8CB92BA72F3D8DD7ULL + 0x2545F4914F6CDD1DULL));
}
constexpr std::uint64_t hash3(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  return hash3_tail(hash3_head(seed, a), b);
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Sequential generator with a fixed, documented output stream. The standard
/// library distributions are implementation-defined, so all sampling in this
/// project goes through this type to keep outputs byte-identical across
/// toolchains.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  double uniform01() noexcept { return to_unit(next()); }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
  }

  /// Uniform integer in [lo, hi].
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) noexcept {
    return lo + below(hi - lo + 1);
  }

  /// Standard normal via Box-Muller (cosine branch only).
  double normal() noexcept {
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace mlab
