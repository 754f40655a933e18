#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cvtrade/quadrature.hpp"
#include "generators.hpp"

using namespace cvtrade;

TEST(Quadrature, GaussLegendreIntegratesPolynomialsExactly) {
  for (int n : {8, 16, 32}) {
    const auto& rule = gauss_legendre(n);
    ASSERT_EQ(rule.size(), static_cast<std::size_t>(n));
    for (int k = 0; k < 2 * n; ++k) {
      double sum = 0.0;
      for (std::size_t i = 0; i < rule.size(); ++i) sum += rule.weights[i] * std::pow(rule.nodes[i], k);
      const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
      ASSERT_NEAR(sum, exact, 1e-13) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Quadrature, ScaledArithmeticSurvivesUnderflow) {
  const Scaled a = Scaled::from_log(-2000.0), b = Scaled::from_log(-2000.0 + std::log(3.0));
  const Scaled s = a + b;
  EXPECT_NEAR(s.log_abs(), -2000.0 + std::log(4.0), 1e-12);
  EXPECT_EQ(s.value(), 0.0);
  EXPECT_TRUE(Scaled{}.is_zero());
  EXPECT_EQ(Scaled{}.log_abs(), kNegInf);
  EXPECT_NEAR((b - a).log_abs(), -2000.0 + std::log(2.0), 1e-12);
}

TEST(Quadrature, LogSumGuard) {
  const double terms[] = {-1000.0, -1000.0};
  EXPECT_NEAR(log_sum_guard(terms), -1000.0 + std::log(2.0), 1e-12);
}

TEST(Quadrature, ArcLowerAngleGeometry) {
  // Circle of radius s = m_c - r just inside: the whole arc is accepted.
  EXPECT_DOUBLE_EQ(detail::arc_lower_angle(2.0, 1.0, 3.0), 0.0);
  // Circle touching the disk edge only at phi = pi.
  EXPECT_NEAR(detail::arc_lower_angle(4.0, 1.0, 3.0), std::numbers::pi, 1e-12);
}

TEST(QuadratureProperty, DiskAreaForAnyOffset) {
  gen::Gen g(21);
  const QuadConfig cfg;
  for (int i = 0; i < 60; ++i) {
    const double r = g.uniform(0.0, 6.0), m_c = g.uniform(0.3, 4.0);
    const auto res = disk_average([](double, double) { return 1.0; }, r, m_c, cfg);
    ASSERT_NEAR(res.value, std::numbers::pi * m_c * m_c, 1e-9 * m_c * m_c) << "r=" << r << " m_c=" << m_c;
  }
}

TEST(QuadratureProperty, GaussianMassInsideCenteredDisk) {
  gen::Gen g(22);
  const QuadConfig cfg;
  for (int i = 0; i < 40; ++i) {
    const double m_c = g.uniform(0.3, 4.0), v = g.uniform(0.1, 2.0);
    const auto res =
        disk_average([v](double s, double) { return std::exp(-s * s / v) / (std::numbers::pi * v); }, 0.0,
                            m_c, cfg);
    ASSERT_NEAR(res.value, -std::expm1(-m_c * m_c / v), 1e-10);
  }
}

TEST(Quadrature, RadialGridIntegratesPriorMoments) {
  const PriorSpec prior(2.0);
  const QuadConfig cfg;
  const RadialGrid grid = make_radial_grid(prior, 14.0, cfg, 1.0);
  double m0 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const double w = std::exp(grid.log_weights[i]);
    m0 += w;
    m2 += w * grid.nodes[i] * grid.nodes[i];
  }
  EXPECT_NEAR(m0, 1.0, 1e-12);
  EXPECT_NEAR(m2, 4.0, 1e-11);
}

TEST(Quadrature, RadialPriorAverageOfSquare) {
  const auto res = radial_prior_average([](double r) { return r * r; }, PriorSpec(1.5), 0.0, QuadConfig{});
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.value, 2.25, 1e-10);
}

TEST(Quadrature, ConfigValidation) {
  QuadConfig c;
  c.rel_tol = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = QuadConfig{};
  c.radial_order = 4;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(QuadConfig{}.refined().radial_order, 32);
}
