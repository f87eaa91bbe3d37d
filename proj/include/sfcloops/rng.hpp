// SPDX-License-Identifier: Apache-2.0
//
// Seeded generator shared by the data generators and k-means initialization.
// The stream is xorshift64* (Marsaglia shifts 12/25/27, multiplier
// 0x2545F4914F6CDD1D) with its state seeded by one splitmix64 step of the
// user seed, so fixtures reproduce bit-for-bit on every platform.

#pragma once

#include <cstdint>

namespace sfcloops {

class Xorshift64Star {
 public:
  explicit Xorshift64Star(std::uint64_t seed);

  std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, bound) by multiply-high; bound must be positive.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sfcloops
