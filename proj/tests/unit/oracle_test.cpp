#include <gtest/gtest.h>

#include <cmath>

#include "cvtrade/ensemble.hpp"
#include "cvtrade/oracle.hpp"

using namespace cvtrade;

namespace {

const SurrogateParams kRef = SurrogateParams::reference();
const PriorSpec kPrior{2.0};
const QuadConfig kQuad{};

OracleConfig small() {
  OracleConfig c;
  c.n_outer = 200;
  c.n_inner = 2000;
  c.bootstrap = 50;
  return c;
}

}  // namespace

TEST(Oracle, ConfigValidation) {
  OracleConfig c;
  c.n_outer = 10;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = OracleConfig{};
  c.n_inner = 999;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = OracleConfig{};
  c.bootstrap = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = OracleConfig{};
  c.jackknife = true;
  c.jackknife_groups = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Oracle, PointAgreesWithQuadratureBothEstimators) {
  const Protocol proto{kRef, FilterSpec::mbnla(1.4, 2.2)};
  for (Estimator est : {Estimator::kRaoBlackwell, Estimator::kFullBrute}) {
    for (double r : {0.0, 1.5, 3.0}) {
      OracleConfig c;
      c.n_inner = 100000;
      c.estimator = est;
      const McPoint mc = mc_point(r, proto, c, 3);
      const PointValue q = evaluate_point(r, proto, kQuad);
      ASSERT_FALSE(mc.inconclusive);
      EXPECT_LT(std::abs(mc.p_succ - q.p_succ), 4.0 * mc.p_err) << "r=" << r;
      EXPECT_LT(std::abs(mc.f_succ - q.f_succ), 4.0 * mc.f_err) << "r=" << r;
    }
  }
}

TEST(Oracle, PointIsDeterministicPerSeedAndStream) {
  const Protocol proto{kRef, FilterSpec::mbnla(1.2, 3.0)};
  OracleConfig c;
  c.n_inner = 5000;
  const McPoint a = mc_point(1.0, proto, c), b = mc_point(1.0, proto, c);
  EXPECT_EQ(a.f_succ, b.f_succ);
  EXPECT_EQ(a.p_succ, b.p_succ);
  EXPECT_NE(mc_point(1.0, proto, c, 1).f_succ, a.f_succ);
  c.seed += 1;
  EXPECT_NE(mc_point(1.0, proto, c).f_succ, a.f_succ);
}

TEST(Oracle, FullBruteInconclusiveFarOutside) {
  OracleConfig c;
  c.n_inner = 1000;
  c.estimator = Estimator::kFullBrute;
  const McPoint mc = mc_point(30.0, {kRef, FilterSpec::mbnla(1.4, 1.0)}, c);
  EXPECT_TRUE(mc.inconclusive);
  EXPECT_EQ(mc.accepted, 0);
}

TEST(Oracle, JackknifeStaysConsistent) {
  const Protocol proto{kRef, FilterSpec::mbnla(1.6, 1.8)};
  OracleConfig c;
  c.n_inner = 50000;
  c.jackknife = true;
  const McPoint mc = mc_point(2.0, proto, c);
  EXPECT_LT(std::abs(mc.f_succ - evaluate_point(2.0, proto, kQuad).f_succ), 4.0 * mc.f_err);
}

TEST(Oracle, EnsembleAgreesWithQuadratureAndIsWorkerIndependent) {
  const Protocol proto{kRef, FilterSpec::mbnla(1.4, 2.2)};
  OracleConfig c = small();
  c.workers = 1;
  const McEnsemble a = mc_ensemble(proto, kPrior, c);
  c.workers = 3;
  const McEnsemble b = mc_ensemble(proto, kPrior, c);
  EXPECT_EQ(a.merit.F, b.merit.F);
  EXPECT_EQ(a.err.D, b.err.D);
  const MeritTriple q = conditional_moments(proto, kPrior, kQuad);
  EXPECT_LT(std::abs(a.merit.F - q.F), 4.0 * a.err.F);
  EXPECT_LT(std::abs(a.merit.P_succ - q.P_succ), 4.0 * a.err.P_succ);
  EXPECT_LT(std::abs(a.merit.D - q.D), 4.0 * a.err.D + a.noise_floor);
  EXPECT_FALSE(a.degenerate);
}

TEST(Oracle, ControlEnsembleNearFlat) {
  const McEnsemble e = mc_ensemble({kRef, FilterSpec::accept_all()}, kPrior, small());
  EXPECT_EQ(e.merit.P_succ, 1.0);
  EXPECT_NEAR(e.merit.F, 0.78125, 4.0 * e.err.F);
  // Residual spread is inner sampling noise only.
  EXPECT_LT(e.merit.D, 3.0 * e.noise_floor);
}

TEST(Oracle, MutualInformationCrossCheck) {
  const Protocol proto{kRef, FilterSpec::mbnla(1.6, 1.8)};
  OracleConfig c;
  c.n_outer = 20000;
  c.n_inner = 1000;
  const auto mi = mc_success_flag_mi(proto, kPrior, c, 20);
  const double q = heralding_mutual_information(proto, kPrior, kQuad);
  EXPECT_GT(mi.value, 0.0);
  EXPECT_LE(mi.bins_used, 20);
  // Binning biases the plug-in value low.
  EXPECT_NEAR(mi.value, q, 0.15 * q);
  const auto ctl = mc_success_flag_mi({kRef, FilterSpec::accept_all()}, kPrior, c, 20);
  EXPECT_EQ(ctl.value, 0.0);
}

TEST(Oracle, HeraldedSamplerRate) {
  const Protocol proto{kRef, FilterSpec::mbnla(1.4, 2.2)};
  const HeraldedSample hs = sample_effective_prior(proto, kPrior, 99, 4000);
  ASSERT_EQ(hs.alphas.size(), 4000u);
  const double rate = 4000.0 / hs.trials;
  const double P = conditional_moments(proto, kPrior, kQuad).P_succ;
  EXPECT_NEAR(rate, P, 4.0 * std::sqrt(P * (1 - P) / hs.trials) + 0.01);
  EXPECT_THROW(sample_effective_prior(proto, kPrior, 99, 0), std::invalid_argument);
  EXPECT_LT(sample_effective_prior(proto, kPrior, 1, 1000, 50).alphas.size(), 1000u);
}
