#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace srbm {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Mixes a parent key with a child index into an independent-looking key.
inline std::uint64_t derive_key(std::uint64_t parent, std::uint64_t child) {
  std::uint64_t s = parent ^ (0xD1B54A32D192ED03ULL * (child + 1));
  splitmix64(s);
  return splitmix64(s);
}

// xoshiro256** seeded through splitmix64. One instance per replication;
// streams are keyed by (seed, replication index) so results never depend on
// which thread ran a replication.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static Rng for_stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(derive_key(seed, stream));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
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

  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(*this); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  std::normal_distribution<double> normal_;
};

}  // namespace srbm
