#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace xarb {

/// SplitMix64 (Steele, Lea, Flood 2014). Used only to expand seeds.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Stateless 64-bit mix of two words; handy for deriving ids and sub-seeds.
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b = 0) {
  SplitMix64 sm(a ^ (b * 0xD1B54A32D192ED03ULL));
  sm.next();
  return sm.next();
}

/// xoshiro256++ 1.0 (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
///
/// Streams: `for_stream(seed, i)` seeds the state from SplitMix64 outputs
/// 4i..4i+3 of a sequence keyed by `seed`, so every path index gets its own
/// generator independent of how paths are distributed over threads.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed = 0) { *this = for_stream(seed, 0); }

  static Xoshiro256pp for_stream(std::uint64_t seed, std::uint64_t stream) {
    Xoshiro256pp g{Raw{}};
    SplitMix64 sm(mix64(seed) + stream * 4 * 0x9E3779B97F4A7C15ULL);
    for (auto& w : g.s_) w = sm.next();
    return g;
  }

  static Xoshiro256pp from_state(std::uint64_t s0, std::uint64_t s1, std::uint64_t s2,
                                 std::uint64_t s3) {
    Xoshiro256pp g{Raw{}};
    g.s_[0] = s0;
    g.s_[1] = s1;
    g.s_[2] = s2;
    g.s_[3] = s3;
    return g;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Exponential variate with the given rate by inverse transform.
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

 private:
  struct Raw {};
  explicit Xoshiro256pp(Raw) {}
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4]{};
};

}  // namespace xarb
