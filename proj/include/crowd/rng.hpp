#pragma once

#include <cstdint>

namespace crowd {

/// SplitMix64 generator. Cheap to seed, so every (phase, item, class) triple
/// gets its own stream derived from the master seed.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) : state_(state) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// 1 with probability p; always consumes exactly one draw.
  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

 private:
  std::uint64_t state_;
};

constexpr std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

enum class Phase : std::uint64_t { Truth = 1, Explore = 2, Exploit = 3 };

/// Counter-based split: the stream for (phase, item, class) does not depend on
/// how many draws any other stream consumed.
constexpr std::uint64_t derive_seed(std::uint64_t master, Phase phase, std::uint64_t item,
                                    std::uint64_t cls) {
  std::uint64_t h = mix64(master + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(phase));
  h = mix64(h ^ (item * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
  h = mix64(h ^ (cls * 0xABC98388FB8FAC03ULL + 0x2545F4914F6CDD1DULL));
  return h;
}

inline SplitMix64 make_stream(std::uint64_t master, Phase phase, std::uint64_t item,
                              std::uint64_t cls) {
  return SplitMix64(derive_seed(master, phase, item, cls));
}

}  // namespace crowd
