#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream id, counter), so results do not depend on how work is
// scheduled across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace skstein {

using philox_block = std::array<std::uint32_t, 4>;
using philox_key = std::array<std::uint32_t, 2>;

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
inline philox_block philox4x32(philox_block ctr, philox_key key) {
  constexpr std::uint32_t m0 = 0xD2511F53u;
  constexpr std::uint32_t m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u;
  constexpr std::uint32_t w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += w0;
    key[1] += w1;
  }
  return ctr;
}

// Disjoint stream identifiers. Each consumer of randomness owns one.
enum class stream_id : std::uint32_t {
  disorder = 0,
  auxiliary = 1,
  replica = 2,
  mixture = 3,
  chain = 4,
  lemma = 5,
  gaussian = 6,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Child seed for (parent, tag); used for per-row and per-replication seeds.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
  return splitmix64(splitmix64(parent) ^ (tag * 0xD6E8FEB86659FD93ull + 0x632BE59BD9B4E019ull));
}

inline philox_key key_from_seed(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

// Uniform in the open interval (0,1) from two 32-bit words (53 bits used).
inline double open_uniform(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// Box-Muller on one Philox block: both normals of the pair.
inline std::array<double, 2> normal_pair(const philox_block& block) {
  const double u1 = open_uniform(block[0], block[1]);
  const double u2 = open_uniform(block[2], block[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

// Standard normal keyed by (seed, stream, a, b). Used where each draw has a
// natural address, e.g. coupling (i, j).
inline double keyed_normal(std::uint64_t seed, stream_id stream, std::uint32_t a, std::uint32_t b) {
  const philox_block ctr{a, b, static_cast<std::uint32_t>(stream), 0u};
  return normal_pair(philox4x32(ctr, key_from_seed(seed)))[0];
}

// Sequential view of one stream. Satisfies UniformRandomBitGenerator, but the
// code in this project only uses its own uniform()/normal() so that draws are
// identical across standard libraries.
class counter_stream {
 public:
  using result_type = std::uint32_t;

  counter_stream(std::uint64_t seed, stream_id stream, std::uint32_t substream = 0)
      : key_(key_from_seed(seed)), stream_(static_cast<std::uint32_t>(stream)), substream_(substream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (word_ == 4) refill();
    return buffer_[word_++];
  }

  double uniform() {
    const std::uint32_t hi = (*this)();
    const std::uint32_t lo = (*this)();
    return open_uniform(hi, lo);
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const philox_block block{(*this)(), (*this)(), (*this)(), (*this)()};
    const auto pair = normal_pair(block);
    spare_ = pair[1];
    has_spare_ = true;
    return pair[0];
  }

  // Uniform integer in [0, bound) by 64-bit multiply-shift; bias is below 2^-32
  // for the bounds used here (at most 2^24).
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t x = (static_cast<std::uint64_t>((*this)()) << 32) | (*this)();
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(x) * bound) >> 64);
  }

  std::uint64_t blocks_used() const noexcept { return counter_; }

 private:
  void refill() {
    const philox_block ctr{static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                           stream_, substream_};
    buffer_ = philox4x32(ctr, key_);
    ++counter_;
    word_ = 0;
  }

  philox_key key_;
  std::uint32_t stream_;
  std::uint32_t substream_;
  std::uint64_t counter_ = 0;
  philox_block buffer_{};
  int word_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace skstein
