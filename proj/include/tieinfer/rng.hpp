#pragma once

// Portable, seedable PRNG. xoshiro256** seeded through SplitMix64.
//
// Standard-library distributions are implementation-defined, so every draw the
// pipeline makes goes through the helpers below; results are bit-identical
// across compilers and platforms.
//
// Stream splitting: Rng::stream(seed, tag, index) hashes (seed, tag, index)
// through SplitMix64 into an independent generator state. Per-tree, per-fold
// and per-repeat generators are derived this way so that work can be scheduled
// in any order without changing results.

#include <cstdint>
#include <span>
#include <utility>

namespace tieinfer {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream tags. Keep values stable: changing one changes every seeded output.
enum class StreamTag : std::uint64_t {
  Tree = 1,
  Fold = 2,
  Repeat = 3,
  FeatureSample = 4,
  Synth = 5,
  Stack = 6,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static Rng stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
    std::uint64_t sm = seed ^ (static_cast<std::uint64_t>(tag) * 0xd1342543de82ef95ULL);
    std::uint64_t mixed = splitmix64(sm);
    mixed ^= index * 0x9e3779b97f4a7c15ULL;
    std::uint64_t sm2 = mixed;
    return Rng(splitmix64(sm2));
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Lemire's nearly-divisionless rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    __uint128_t m = static_cast<__uint128_t>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<__uint128_t>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Poisson draw; multiplication method in chunks keeps it exact for any mean.
  std::uint64_t poisson(double mean);

  // Number of failures before the first success of a Bernoulli(1/mean) trial
  // sequence, shifted to start at 1: support {1, 2, ...} with the given mean.
  std::uint64_t geometric_at_least_one(double mean);

  double exponential(double mean);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

}  // namespace tieinfer
