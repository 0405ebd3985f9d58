#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace spinchain {

/// Philox-4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Every output block is a pure function of (key, counter). A chain derives
/// its key from (seed, chain id) and its counter from (sweep, move, draw), so
/// any single draw can be reproduced without replaying the stream.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Block generate(Block ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Stream of uniforms/normals addressed by a 64-bit seed, a 32-bit stream id
/// and a (hi: 32-bit, lo: 64-bit) position. Satisfies UniformRandomBitGenerator for 64-bit output.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t hi = 0,
             std::uint64_t lo = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream),
        hi_(hi),
        lo_(lo) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    if (buffered_ == 0) refill();
    --buffered_;
    return buffer_[buffered_];
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the paired variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, bound) by Lemire's multiply-shift (bias < 2^-64 * bound).
  std::uint64_t below(std::uint64_t bound) {
    __extension__ using u128 = unsigned __int128;
    const u128 product = static_cast<u128>((*this)()) * bound;
    return static_cast<std::uint64_t>(product >> 64);
  }

 private:
  void refill() {
    // Counter layout: words 0-1 position (lo), word 2 position (hi, low 32
    // bits), word 3 stream id. Distinct (stream, hi, lo) never share a block.
    const Philox4x32::Block ctr{static_cast<std::uint32_t>(lo_),
                                static_cast<std::uint32_t>(lo_ >> 32),
                                static_cast<std::uint32_t>(hi_),
                                static_cast<std::uint32_t>(stream_)};
    const auto out = Philox4x32::generate(ctr, key_);
    buffer_[0] = (std::uint64_t{out[0]} << 32) | out[1];
    buffer_[1] = (std::uint64_t{out[2]} << 32) | out[3];
    buffered_ = 2;
    ++lo_;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t hi_;
  std::uint64_t lo_;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace spinchain
