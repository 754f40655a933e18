#include <gtest/gtest.h>

#include <cmath>

#include "cvtrade/ensemble.hpp"
#include "generators.hpp"

using namespace cvtrade;

namespace {

const SurrogateParams kRef = SurrogateParams::reference();
const PriorSpec kPrior{2.0};
const QuadConfig kQuad{};

// Frozen from the numpy tensor-quadrature oracle in tests/oracle/reference_values.py.
struct FrozenEnsemble {
  double g, m_c, P, F, D, I_sel, I_alpha_S;
};
constexpr FrozenEnsemble kFrozen[] = {
    {1.2, 3.0, 0.19041979208, 0.779650419574, 0.0275995729554, 0.142076496358, 0.0332018478195},
    {1.4, 2.2, 0.205704231908, 0.785504087556, 0.0336794317495, 0.168262762504, 0.0411847932316},
    {1.6, 1.8, 0.199693885296, 0.788214192235, 0.035829530699, 0.263940295391, 0.0620081267772},
};

}  // namespace

TEST(Ensemble, FrozenTriplesAndInformation) {
  for (const auto& fe : kFrozen) {
    const auto e = evaluate_ensemble({kRef, FilterSpec::mbnla(fe.g, fe.m_c)}, kPrior, kQuad);
    EXPECT_TRUE(e.converged);
    EXPECT_NEAR(e.merit.P_succ, fe.P, 1e-10) << fe.g;
    EXPECT_NEAR(e.merit.F, fe.F, 1e-10) << fe.g;
    EXPECT_NEAR(e.merit.D, fe.D, 1e-10) << fe.g;
    EXPECT_NEAR(e.report.I_sel, fe.I_sel, 1e-9) << fe.g;
    EXPECT_NEAR(e.report.I_alpha_S, fe.I_alpha_S, 1e-9) << fe.g;
    EXPECT_EQ(e.report.S, e.merit.D);
  }
}

TEST(Ensemble, SlopeIndexStableUnderGridRefinement) {
  const Protocol proto{kRef, FilterSpec::mbnla(1.4, 2.2)};
  const auto coarse = evaluate_ensemble(proto, kPrior, kQuad);
  const auto fine = evaluate_ensemble(proto, kPrior, kQuad, {.panel_width = 0.5});
  EXPECT_NEAR(coarse.report.S1, fine.report.S1, 1e-3 * fine.report.S1);
  EXPECT_NEAR(coarse.report.S2, 0.0020529, 1e-6);
}

TEST(Ensemble, ControlIsFlatAndUninformative) {
  const auto e = evaluate_ensemble({kRef, FilterSpec::accept_all()}, kPrior, kQuad);
  EXPECT_NEAR(e.merit.F, 0.78125, 1e-14);
  EXPECT_LT(e.merit.D, 1e-8);
  EXPECT_EQ(e.merit.P_succ, 1.0);
  EXPECT_LT(e.report.I_sel, 1e-10);
  EXPECT_LT(e.report.I_alpha_S, 1e-10);
  EXPECT_EQ(e.report.S1, 0.0);
}

TEST(Ensemble, WrappersAgreeWithSummary) {
  const Protocol proto{kRef, FilterSpec::mbnla(1.6, 1.8)};
  const auto e = evaluate_ensemble(proto, kPrior, kQuad);
  EXPECT_EQ(conditional_moments(proto, kPrior, kQuad).D, e.merit.D);
  EXPECT_EQ(heralding_mutual_information(proto, kPrior, kQuad), e.report.I_alpha_S);
  EXPECT_EQ(selectivity_divergence(proto, kPrior, kQuad), e.report.I_sel);
}

TEST(Ensemble, EffectivePriorIntegratesToOne) {
  const Protocol proto{kRef, FilterSpec::mbnla(1.4, 2.2)};
  const double log_P = evaluate_ensemble(proto, kPrior, kQuad, {.with_slopes = false}).log_p_succ;
  const auto res = radial_prior_average(
      [&](double r) { return std::exp(evaluate_point(r, proto, kQuad).log_p_succ - log_P); }, kPrior, 10.0, kQuad);
  EXPECT_NEAR(res.value, 1.0, 1e-8);
  const double r = 1.3;
  EXPECT_NEAR(effective_prior_density(r, proto, kPrior, kQuad),
              kPrior.density(r) * evaluate_point(r, proto, kQuad).p_succ / std::exp(log_P), 1e-14);
}

TEST(Ensemble, BinaryEntropy) {
  EXPECT_EQ(binary_entropy(0.0), 0.0);
  EXPECT_EQ(binary_entropy(1.0), 0.0);
  EXPECT_NEAR(binary_entropy(0.5), std::log(2.0), 1e-15);
  EXPECT_NEAR(binary_entropy_from_log(std::log(0.3)), binary_entropy(0.3), 1e-15);
  EXPECT_THROW(binary_entropy(1.5), std::invalid_argument);
  EXPECT_NEAR(binary_entropy_from_log(-1e-20), 1e-20 * (1.0 - std::log(1e-20)), 1e-30);
}

TEST(Ensemble, RoundoffClamp) {
  EXPECT_EQ(clamp_roundoff(-5e-13, "x"), 0.0);
  EXPECT_EQ(clamp_roundoff(0.25, "x"), 0.25);
  EXPECT_THROW(clamp_roundoff(-1e-9, "x"), std::logic_error);
}

TEST(Ensemble, ObjectiveAndGuarantees) {
  const MeritTriple m{0.8, 0.02, 0.3};
  EXPECT_NEAR(robust_objective(m, 3.0), 0.74, 1e-15);
  EXPECT_NEAR(cantelli_guarantee(3.0), 0.9, 1e-15);
  EXPECT_NEAR(cantelli_lambda_for(0.9), 3.0, 1e-12);
  EXPECT_NEAR(throughput_bound(m, 0.04), 0.3 * 0.75, 1e-15);
  EXPECT_EQ(throughput_bound(m, 0.01), 0.0);
  EXPECT_THROW(robust_objective(m, 0.0), std::invalid_argument);
  EXPECT_THROW(cantelli_lambda_for(1.0), std::invalid_argument);
  EXPECT_THROW(RobustObjective::make(-1.0, 0.1), std::invalid_argument);
}

TEST(EnsembleProperty, JensenAndMomentIdentities) {
  gen::Gen g(41);
  for (int i = 0; i < 10; ++i) {
    const auto p = g.params();
    const auto f = g.filter();
    const PriorSpec prior(g.uniform(0.5, 3.0));
    const auto e = evaluate_ensemble({p, f}, prior, kQuad, {.with_slopes = false});
    ASSERT_GE(e.report.I_sel, -1e-12) << gen::describe(p, f);
    ASSERT_GE(e.report.I_alpha_S, -1e-12) << gen::describe(p, f);
    ASSERT_GE(e.merit.D, 0.0);
    ASSERT_GT(e.merit.P_succ, 0.0);
    ASSERT_LE(e.merit.P_succ, 1.0);
    ASSERT_NEAR(e.merit.D * e.merit.D + e.merit.F * e.merit.F, e.second_moment, 1e-10) << gen::describe(p, f);
    // The success flag cannot carry more than its own entropy.
    ASSERT_LE(e.report.I_alpha_S, binary_entropy(e.merit.P_succ) + 1e-12);
  }
}

TEST(EnsembleProperty, ControlFlatForAnyNoise) {
  gen::Gen g(42);
  for (int i = 0; i < 20; ++i) {
    const auto p = g.params();
    const auto e = evaluate_ensemble({p, FilterSpec::accept_all()}, PriorSpec(g.uniform(0.5, 3.0)), kQuad);
    ASSERT_NEAR(e.merit.F, deterministic_baseline(p), 1e-13);
    ASSERT_LT(e.merit.D, 1e-8);
  }
}
