// Minimal use of the header-only library: one protocol, its profile at a
// few radii, the ensemble triple and the robust operating point of a sweep.

#include <cstdio>

#include "cvtrade/cvtrade.hpp"

int main() {
  using namespace cvtrade;
  const SurrogateParams params = SurrogateParams::reference();
  const PriorSpec prior(2.0);
  const QuadConfig quad;
  const Protocol proto{params, FilterSpec::mbnla(1.4, 2.2)};

  for (double r : {0.0, 1.0, 2.0, 3.0}) {
    const PointValue v = evaluate_point(r, proto, quad);
    std::printf("r = %.1f  f_succ = %.6f  P_succ = %.6f\n", r, v.f_succ, v.p_succ);
  }

  const EnsembleSummary e = evaluate_ensemble(proto, prior, quad);
  std::printf("F = %.6f  D = %.6f  P_succ = %.6f  I(alpha;S) = %.6f\n", e.merit.F, e.merit.D, e.merit.P_succ,
              e.report.I_alpha_S);

  const auto records = sweep({1.2, 1.6}, {1.8, 3.0}, params, prior, 3.0, quad, {.include_control = true});
  const SweepRecord best = objective_best(records, 3.0);
  std::printf("best J_3: %s g = %.1f m_c = %.1f  J = %.6f\n", best.is_control() ? "control" : "filter", best.g,
              best.m_c, best.J_lambda);
}
