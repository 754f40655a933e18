#pragma once

// Counter-based Philox4x32-10. Every draw is a pure function of
// (seed, counter), so Monte Carlo streams can be addressed by sample index
// and the result does not depend on thread scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace cvtrade {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr std::pair<std::uint32_t, std::uint32_t> mulhilo(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  return {static_cast<std::uint32_t>(p >> 32), static_cast<std::uint32_t>(p)};
}

}  // namespace detail

constexpr Philox4x32Counter philox4x32_10(Philox4x32Counter ctr, Philox4x32Key key) {
  for (int round = 0; round < 10; ++round) {
    const auto [hi0, lo0] = detail::mulhilo(detail::kPhiloxM0, ctr[0]);
    const auto [hi1, lo1] = detail::mulhilo(detail::kPhiloxM1, ctr[2]);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += detail::kPhiloxW0;
    key[1] += detail::kPhiloxW1;
  }
  return ctr;
}

/// Purposes separate otherwise identical counters.
enum class StreamTag : std::uint32_t {
  kPrior = 1,
  kNoise = 2,
  kAccept = 3,
  kResidual = 4,
  kBootstrap = 5,
  kHerald = 6,
};

/// Stream addressed by (seed, outer index, tag); the inner index advances.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint32_t outer, StreamTag tag)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        outer_(outer),
        tag_(static_cast<std::uint32_t>(tag)) {}

  /// Two 64-bit words from block `inner`.
  std::array<std::uint64_t, 2> block(std::uint32_t inner) const {
    const Philox4x32Counter out = philox4x32_10({inner, outer_, tag_, 0u}, key_);
    return {(static_cast<std::uint64_t>(out[0]) << 32) | out[1], (static_cast<std::uint64_t>(out[2]) << 32) | out[3]};
  }

  /// Pair of uniforms in (0, 1) from the next block.
  std::pair<double, double> uniform2() {
    const auto b = block(next_++);
    return {to_unit(b[0]), to_unit(b[1])};
  }

  double uniform() { return uniform2().first; }

  /// Circular complex Gaussian with E|z|^2 = variance.
  std::pair<double, double> complex_normal(double variance) {
    const auto [u1, u2] = uniform2();
    const double rad = std::sqrt(-variance * std::log(u1));
    const double phase = 2.0 * std::numbers::pi * u2;
    return {rad * std::cos(phase), rad * std::sin(phase)};
  }

  std::uint32_t position() const { return next_; }

  /// 52 high bits, centered in their cell: never 0, never 1 (with 53 bits
  /// the top cell center rounds up to 1.0).
  static double to_unit(std::uint64_t x) { return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52; }

 private:
  Philox4x32Key key_;
  std::uint32_t outer_;
  std::uint32_t tag_;
  std::uint32_t next_ = 0;
};

}  // namespace cvtrade
