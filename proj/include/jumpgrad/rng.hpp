// Counter-based random streams (Philox4x32-10). A stream is addressed by
// (master_seed, replication_index, purpose, salt); distinct keys give
// statistically independent streams and identical keys reproduce identical
// draws on any platform, independent of how many streams are consumed
// concurrently.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace jumpgrad::rng {

// Stream purposes. Each logical consumer of randomness inside one replication
// gets its own purpose so adding a consumer never perturbs another.
enum class Purpose : std::uint16_t {
  kBrownian = 1,
  kJumpCount = 2,
  kMarks = 3,
  kTau = 4,
  kTauReward = 5,
  kZBrownian = 6,
  kZJumpCount = 7,
  kZMarks = 8,
  kCompensatorMark = 9,
  kZCompensatorMark = 10,
  kProbe = 11,
  kInit = 12,
  kGeneric = 13,
  kJumpPartMark = 14,
};

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         std::array<std::uint32_t, 2>& key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  key[0] += 0x9E3779B9u;
  key[1] += 0xBB67AE85u;
}

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) philox_round(ctr, key);
  return ctr;
}

}  // namespace detail

class Stream {
 public:
  Stream() = default;
  Stream(std::uint64_t master_seed, std::uint64_t replication, Purpose purpose,
         std::uint32_t salt = 0)
      : key_{static_cast<std::uint32_t>(master_seed),
             static_cast<std::uint32_t>(master_seed >> 32)},
        hi2_(static_cast<std::uint32_t>(replication)),
        hi3_((static_cast<std::uint32_t>(replication >> 32) << 20) ^
             (static_cast<std::uint32_t>(purpose) << 10) ^ salt) {}

  // Raw 32-bit draw.
  std::uint32_t next_u32() {
    if (block_pos_ == 4) refill();
    return block_[block_pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on (0,1): 53 random bits, offset so 0 is excluded.
  double uniform() {
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (platform-stable, unlike
  // std::normal_distribution whose algorithm is unspecified).
  double normal() {
    if (have_cached_normal_) {
      have_cached_normal_ = false;
      return cached_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    have_cached_normal_ = true;
    return r * std::cos(a);
  }

  // Poisson by inversion; fine for the small per-step means used here.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    const double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf && k < 10000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }

  std::uint64_t uniform_index(std::uint64_t n) {
    // Modulo bias is ~2^-64 for the small n used here.
    return next_u64() % n;
  }

 private:
  void refill() {
    const std::array<std::uint32_t, 4> ctr{
        static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
        hi2_, hi3_};
    block_ = detail::philox4x32_10(ctr, key_);
    ++counter_;
    block_pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_{0, 0};
  std::uint32_t hi2_ = 0, hi3_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  double cached_normal_ = 0.0;
  bool have_cached_normal_ = false;
};

// Exposed for known-answer tests.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  return detail::philox4x32_10(ctr, key);
}

}  // namespace jumpgrad::rng
