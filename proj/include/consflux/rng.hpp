#pragma once

#include <cmath>
#include <cstdint>

namespace consflux {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream tags keep the RNG consumers (IC sampling, window draws, noise, init)
// on independent substreams of one user-facing seed.
namespace rng_tag {
constexpr std::uint64_t ic = 0x6963;
constexpr std::uint64_t window = 0x77696e;
constexpr std::uint64_t noise = 0x6e6f69;
constexpr std::uint64_t init = 0x696e69;
}  // namespace rng_tag

// xoshiro256++ with fully specified draw semantics, so that datasets and
// checkpoints are bit-reproducible across standard library versions.
class Rng {
public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) {
      x = splitmix64(x);
      s = x;
    }
  }

  // Independent substream identified by (seed, tag, index).
  static Rng stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    return Rng(splitmix64(splitmix64(splitmix64(seed) ^ tag) ^ index));
  }

  std::uint64_t next_u64() {
    auto rotl = [](std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
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

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Uniform integer in [0, n), Lemire reduction (n is tiny in our use).
  std::uint64_t uniform_below(std::uint64_t n) {
    return std::uint64_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Box-Muller; draws two uniforms per variate, no cached spare.
  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
  std::uint64_t state_[4];
};

}  // namespace consflux
