#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace glasslab {

/// SplitMix64 output mixer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based 64-bit generator: word k of a stream is mix64(key + k * golden).
///
/// Streams are split by hashing a stream id into the key (`derive`), so two
/// streams derived from the same parent never share state and any sample can
/// be regenerated from (key, counter) alone. Gaussians use the polar-free
/// Box-Muller transform; both outputs of a pair are consumed in order. The
/// algorithm is fixed so seeded runs reproduce across platforms and thread
/// counts.
class CounterRng {
public:
  explicit constexpr CounterRng(std::uint64_t key, std::uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  static constexpr CounterRng from_seed(std::uint64_t seed) { return CounterRng(mix64(seed ^ 0x6A09E667F3BCC909ULL)); }

  /// Independent child stream identified by `stream`.
  constexpr CounterRng derive(std::uint64_t stream) const {
    return CounterRng(mix64(key_ ^ mix64(stream + 0xD1B54A32D192ED03ULL)));
  }

  constexpr std::uint64_t key() const { return key_; }

  std::uint64_t next_u64() {
    const std::uint64_t word = mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    ++counter_;
    return word;
  }

  /// Uniform in the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

private:
  std::uint64_t key_;
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace glasslab
