#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "cvtrade/rng.hpp"

using namespace cvtrade;

TEST(Rng, PhiloxKnownAnswers) {
  // Random123 known-answer vectors for philox4x32_10.
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (Philox4x32Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (Philox4x32Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (Philox4x32Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Rng, PhiloxIsConstexpr) {
  static_assert(philox4x32_10({0, 0, 0, 0}, {0, 0})[0] == 0x6627e8d5u);
}

TEST(Rng, StreamsAreAddressable) {
  CounterStream a(42, 7, StreamTag::kNoise), b(42, 7, StreamTag::kNoise);
  for (int i = 0; i < 5; ++i) b.uniform();
  EXPECT_EQ(a.block(5), CounterStream(42, 7, StreamTag::kNoise).block(5));
  EXPECT_EQ(b.position(), 5u);
  EXPECT_EQ(b.uniform(), CounterStream::to_unit(a.block(5)[0]));
  EXPECT_NE(a.block(0), CounterStream(42, 7, StreamTag::kPrior).block(0));
  EXPECT_NE(a.block(0), CounterStream(42, 8, StreamTag::kNoise).block(0));
  EXPECT_NE(a.block(0), CounterStream(43, 7, StreamTag::kNoise).block(0));
}

TEST(Rng, UnitIntervalIsOpen) {
  EXPECT_GT(CounterStream::to_unit(0), 0.0);
  EXPECT_LT(CounterStream::to_unit(~0ull), 1.0);
}

TEST(Rng, UniformAndNormalMoments) {
  CounterStream s(7, 0, StreamTag::kResidual);
  const int n = 200000;
  double su = 0.0, su2 = 0.0, sn2 = 0.0, sx = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    su += u;
    su2 += u * u;
  }
  for (int i = 0; i < n; ++i) {
    const auto [x, y] = s.complex_normal(0.5);
    sx += x;
    sn2 += x * x + y * y;
  }
  EXPECT_NEAR(su / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(su2 / n, 1.0 / 3.0, 0.003);
  EXPECT_NEAR(sx / n, 0.0, 5 * std::sqrt(0.25 / n));
  EXPECT_NEAR(sn2 / n, 0.5, 5 * 0.5 / std::sqrt(n));
}
