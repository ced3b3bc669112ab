#pragma once

#include "redps/special.hpp"

#include <array>
#include <cmath>
#include <cstdint>

namespace redps {

/// Counter-based PRNG (Philox4x32-10). A generator is addressed by
/// (seed, stream): replication j of a run owns stream j, so the draw
/// sequence of every replication is fixed by (seed, j) alone and the
/// assignment of replications to worker threads cannot change any result.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        stream_(stream) {}

  std::uint64_t next_u64() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const std::array<std::uint32_t, 4> b = block(counter_++);
    spare_ = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
    have_spare_ = true;
    return (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  }

  /// Uniform on the open interval (0,1); never returns 0 or 1.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal draw via the inverse CDF (keeps streams
  /// platform-deterministic, unlike std::normal_distribution).
  double normal() { return inverse_normal_cdf(uniform()); }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  static std::uint32_t mulhi(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>(
        (static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b)) >> 32);
  }

  std::array<std::uint32_t, 4> block(std::uint64_t ctr) const {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    std::uint32_t c0 = static_cast<std::uint32_t>(ctr);
    std::uint32_t c1 = static_cast<std::uint32_t>(ctr >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream_);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream_ >> 32);
    std::uint32_t k0 = key0_;
    std::uint32_t k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      const std::uint32_t hi0 = mulhi(kM0, c0);
      const std::uint32_t lo0 = kM0 * c0;
      const std::uint32_t hi1 = mulhi(kM1, c2);
      const std::uint32_t lo1 = kM1 * c2;
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += kW0;
      k1 += kW1;
    }
    return {c0, c1, c2, c3};
  }

  std::uint32_t key0_;
  std::uint32_t key1_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::uint64_t spare_ = 0;
  bool have_spare_ = false;
};

/// SplitMix-style 64-bit hash, used to derive replication seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace redps
