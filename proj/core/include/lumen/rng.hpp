#pragma once

#include <cstdint>
#include <string_view>

namespace lumen {

// Seedable 64-bit generator (splitmix64). Every randomised pipeline stage
// draws from this generator so that outputs are reproducible across runs,
// platforms and implementations. The full update rule:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   output = z ^ (z >> 31)
//
// Doubles use the top 53 bits: (output >> 11) * 2^-53. Bounded draws use
// output % n; both rules are fixed parts of the documented stream.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n). n == 0 yields 0.
  std::uint64_t next_below(std::uint64_t n) {
    return n == 0 ? 0 : next_u64() % n;
  }

  // Per-item stream derivation: hashes the tag (FNV-1a) into the seed so
  // batch order does not affect any single item's stream.
  static std::uint64_t derive(std::uint64_t seed, std::string_view tag) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : tag) {
      h ^= c;
      h *= 0x100000001B3ULL;
    }
    SplitMix64 mix(seed ^ h);
    return mix.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace lumen
