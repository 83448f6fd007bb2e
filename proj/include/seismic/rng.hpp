#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace seismic {

// Deterministic random streams: xoshiro256++ generators keyed by
// splitmix64-folded (seed, purpose, index...) tuples.
//
// Stream derivation: key0 = splitmix(seed), then for each word w of
// (purpose, i0, i1, i2): key = splitmix(key xor splitmix(w)). The four
// xoshiro state words come from iterating splitmix on the final key.
// Distinct tuples give independent streams; the same tuple always gives
// the same sequence, on any platform and with any worker count. All
// variate transforms below are hand-rolled (no std::*_distribution) so
// sequences do not depend on the standard library implementation.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t key) {
    for (auto& word : state_) word = splitmix64(key);
    // xoshiro must not start from the all-zero state
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n) without modulo bias (Lemire multiply-shift)
  std::uint64_t uniform_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Box-Muller, cosine branch only: exactly two uniforms per variate.
  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Knuth product-of-uniforms; split recursively so exp(-mean) stays
  // representable for large means.
  std::uint64_t poisson(double mean) {
    if (mean < 0) throw std::invalid_argument("poisson: negative mean");
    std::uint64_t total = 0;
    while (mean > 60.0) {
      total += poisson_small(60.0);
      mean -= 60.0;
    }
    return total + poisson_small(mean);
  }

 private:
  std::uint64_t poisson_small(double mean) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_;
};

// Stream purposes. Keep values stable: they are part of the
// reproducibility contract for anything written to disk.
namespace streams {
constexpr std::uint64_t kEventCount = 1;
constexpr std::uint64_t kEventCoords = 2;
constexpr std::uint64_t kEventArrivals = 3;
constexpr std::uint64_t kSignalNoise = 4;
constexpr std::uint64_t kChain = 5;
constexpr std::uint64_t kPartitionOffset = 6;
constexpr std::uint64_t kBootstrap = 7;
}  // namespace streams

inline Rng derive_stream(std::uint64_t seed, std::uint64_t purpose,
                         std::uint64_t i0 = 0, std::uint64_t i1 = 0,
                         std::uint64_t i2 = 0) {
  std::uint64_t key = seed;
  std::uint64_t k = splitmix64(key);
  for (std::uint64_t word : {purpose, i0, i1, i2}) {
    std::uint64_t w = word;
    k ^= splitmix64(w);
    k = splitmix64(k);
  }
  return Rng(k);
}

}  // namespace seismic
