#pragma once

#include <cstdint>

namespace epinet {

/// SplitMix64 generator (Steele, Lea, Flood 2014). Chosen over std::mt19937
/// because its output sequence is fixed by the algorithm, not by the standard
/// library's distribution implementations, so seeded runs reproduce
/// bit-for-bit across platforms. Streams for independent runs are derived by
/// seeding with master_seed + run_index.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1); safe to pass to log().
  double next_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

}  // namespace epinet
