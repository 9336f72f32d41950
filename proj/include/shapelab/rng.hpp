#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace shapelab {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the stream with the given index under a master seed. Streams are
/// addressed by (master, index) alone, so Monte Carlo results never depend on
/// evaluation order or worker count.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator: the k-th output of a stream keyed by `seed` is
/// mix64(mix64(seed) + (k + 1) * golden), i.e. SplitMix64 started from a
/// hashed key. Normal deviates use the Box-Muller transform on two 53-bit
/// uniforms, so outputs are bit-reproducible given the platform libm.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) : state_(mix64(seed)) {}

  constexpr std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  /// Uniform on (0, 1]; never returns 0 so log() is safe.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace shapelab
