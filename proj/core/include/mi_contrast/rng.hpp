#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mic {

// splitmix64, used for seeding and for stable seed-splitting.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from (master_seed, stream_id).
// Parallel consumers (sweep cells, repeated probes) each get their own
// stream so no two share a generator state.
inline uint64_t derive_stream_seed(uint64_t master_seed, uint64_t stream_id) {
  uint64_t s = master_seed;
  uint64_t a = splitmix64(s);
  s = a ^ (stream_id * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL);
  return splitmix64(s);
}

// xoshiro256++ (Blackman & Vigna). Pinned algorithm: identical seeds give
// identical streams on every platform, which the golden-file tests rely on.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  uint64_t next() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in (0, 1]; strictly positive so log() below is always finite.
  double uniform_pos() {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

// Standard normal draws via the Box-Muller transform (not the platform
// library normal distribution, whose stream is implementation-defined).
class NormalSampler {
 public:
  explicit NormalSampler(uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = rng_.uniform_pos();
    const double u2 = rng_.uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Xoshiro256pp& raw() { return rng_; }

 private:
  Xoshiro256pp rng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mic
