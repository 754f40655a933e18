#pragma once

// Executable invariant suite behind `cvtrade check`. Every check reports the
// measured quantity, its threshold and the margin (positive = inside bound).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cvtrade/ensemble.hpp"
#include "cvtrade/oracle.hpp"
#include "cvtrade/profile.hpp"
#include "cvtrade/tradeoff.hpp"

namespace cvtrade {

struct CheckResult {
  std::string name;
  bool passed = false;
  bool gating = true;  // soft checks are reported but never fail the suite
  double measured = 0.0;
  double threshold = 0.0;
  double margin = 0.0;
  std::string detail;
};

struct CheckOptions {
  SurrogateParams params = SurrogateParams::reference();
  PriorSpec prior{2.0};
  std::vector<std::pair<double, double>> filters{{1.2, 3.0}, {1.4, 2.2}, {1.6, 1.8}};
  QuadConfig quad;
  OracleConfig oracle;
  int point_inner = 1'000'000;        // n_inner of the r = 0 oracle point
  std::size_t herald_samples = 10'000;
  std::vector<double> lambdas{1.0, 2.0, 3.0};
  std::vector<double> slope_thetas{0.005, 0.01, 0.02, 0.04};
  double baseline_offset = 0.0;  // test hook: shifts the flatness reference
  bool with_oracle = true;
  bool with_slope = true;
  unsigned workers = 0;
};

namespace detail {

/// Upper-bound check: passes when measured <= threshold.
inline CheckResult at_most(std::string name, double measured, double threshold, std::string detail = {}) {
  return {std::move(name), measured <= threshold, true, measured, threshold, threshold - measured,
          std::move(detail)};
}

/// Lower-bound check: passes when measured >= threshold.
inline CheckResult at_least(std::string name, double measured, double threshold, std::string detail = {}) {
  return {std::move(name), measured >= threshold, true, measured, threshold, measured - threshold,
          std::move(detail)};
}

inline std::vector<double> uniform_grid(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace detail

inline CheckResult check_flatness(const CheckOptions& o) {
  const Protocol control{o.params, FilterSpec::accept_all()};
  const auto prof = profile_table(detail::uniform_grid(0.0, 6.0, 121), control, o.quad, o.workers);
  const double f0 = deterministic_baseline(o.params) + o.baseline_offset;
  double worst = 0.0;
  for (double f : prof.f_succ) worst = std::max(worst, std::abs(f - f0));
  return detail::at_most("flatness", worst, 1e-8, "max |f_succ - f0| over 121 radii on [0, 6]");
}

inline CheckResult check_futility(const CheckOptions& o) {
  const SurrogateParams futile(o.params.v_n(), o.params.v_eps(), 0.0);
  const double target = 1.0 / (1.0 + futile.v_eps());
  double worst = 0.0;
  for (const auto& [g, m_c] : o.filters) {
    const Protocol proto{futile, FilterSpec::mbnla(g, m_c)};
    const auto prof = profile_table(default_profile_radii(proto.filter), proto, o.quad, o.workers);
    for (double f : prof.f_succ) worst = std::max(worst, std::abs(f - target));
  }
  return detail::at_most("futility", worst, 1e-8, "kappa = 0: max |f_succ - 1/(1+V_eps)|");
}

inline CheckResult check_tail_bound(const CheckOptions& o) {
  double worst = -1.0;
  for (const auto& [g, m_c] : o.filters) {
    const Protocol proto{o.params, FilterSpec::mbnla(g, m_c)};
    for (double dr : {0.0, 0.5, 1.0, 2.0}) {
      const double r = m_c + dr;
      worst = std::max(worst, evaluate_point(r, proto, o.quad).f_succ - tail_bound(r, proto));
    }
  }
  return detail::at_most("tail_bound", worst, 1e-8, "max f_succ - bound at r - m_c in {0, 0.5, 1, 2}");
}

inline CheckResult check_phase_invariance(const CheckOptions& o) {
  const Protocol proto{o.params, FilterSpec::mbnla(1.4, 2.2)};
  double worst = 0.0;
  for (double r : {0.5, 2.0, 4.0}) {
    const double f = evaluate_point(r, proto, o.quad).f_succ;
    for (double phi : {std::numbers::pi / 7, std::numbers::pi / 3, 2 * std::numbers::pi / 3})
      worst = std::max(worst, std::abs(phase_invariance_probe(std::polar(r, phi), proto, o.quad).value - f));
  }
  return detail::at_most("phase_invariance", worst, 1e-8, "(1.4, 2.2), r in {0.5, 2, 4}, 3 phases");
}

/// Covariant-baseline and Jensen checks on the ensemble functionals, plus the
/// moment identities that tie D, S and the second moment together.
inline std::vector<CheckResult> check_ensemble(const CheckOptions& o) {
  std::vector<CheckResult> out;
  const auto control = evaluate_ensemble({o.params, FilterSpec::accept_all()}, o.prior, o.quad);
  const double worst_flat =
      std::max({control.merit.D, control.report.S1, control.report.S2, std::abs(control.merit.P_succ - 1.0)});
  out.push_back(detail::at_most("control_flat_ensemble", worst_flat, 1e-8, "max(D, S1, S2, |P - 1|)"));
  out.push_back(detail::at_most("control_information", std::max(control.report.I_sel, control.report.I_alpha_S),
                                1e-10, "max(I_sel, I(alpha;S))"));
  double min_info = std::numeric_limits<double>::infinity(), worst_moment = 0.0, worst_sd = 0.0;
  for (const auto& [g, m_c] : o.filters) {
    const auto e = evaluate_ensemble({o.params, FilterSpec::mbnla(g, m_c)}, o.prior, o.quad);
    min_info = std::min({min_info, e.report.I_sel, e.report.I_alpha_S});
    worst_moment = std::max(worst_moment,
                            std::abs(e.merit.D * e.merit.D + e.merit.F * e.merit.F - e.second_moment));
    worst_sd = std::max(worst_sd, std::abs(e.report.S - e.merit.D));
  }
  out.push_back(detail::at_least("jensen_nonnegativity", min_info, -1e-12, "min(I_sel, I(alpha;S)) over filters"));
  out.push_back(detail::at_most("moment_consistency", worst_moment, 1e-10, "|D^2 + F^2 - E[f^2]|"));
  out.push_back(detail::at_most("selectivity_equals_D", worst_sd, 1e-10, "|S - D|"));
  return out;
}

/// Quadrature against the Monte Carlo oracle at (1.2, 3.0): the r = 0 point
/// and the ensemble triple, each within 3 reported standard errors.
inline std::vector<CheckResult> check_oracle(const CheckOptions& o) {
  std::vector<CheckResult> out;
  const Protocol proto{o.params, FilterSpec::mbnla(1.2, 3.0)};
  OracleConfig pc = o.oracle;
  pc.n_inner = o.point_inner;
  const McPoint mc = mc_point(0.0, proto, pc);
  const PointValue q = evaluate_point(0.0, proto, o.quad);
  out.push_back(detail::at_most("oracle_point_p_succ", std::abs(q.p_succ - mc.p_succ) / mc.p_err, 3.0,
                                "|quad - mc| / se at r = 0"));
  out.push_back(detail::at_most("oracle_point_f_succ", std::abs(q.f_succ - mc.f_succ) / mc.f_err, 3.0,
                                "|quad - mc| / se at r = 0"));
  const MeritTriple quad = conditional_moments(proto, o.prior, o.quad);
  const McEnsemble ens = mc_ensemble(proto, o.prior, o.oracle);
  const double zF = std::abs(quad.F - ens.merit.F) / ens.err.F;
  const double zD = std::abs(quad.D - ens.merit.D) / ens.err.D;
  const double zP = std::abs(quad.P_succ - ens.merit.P_succ) / ens.err.P_succ;
  out.push_back(detail::at_most("oracle_ensemble", std::max({zF, zD, zP}), 3.0,
                                "max z over (F, D, P): " + detail::fmt(zF) + ", " + detail::fmt(zD) + ", " +
                                    detail::fmt(zP)));
  return out;
}

/// Cantelli and Chebyshev fractions from heralded samples at (1.4, 2.2), with
/// X = f_succ(alpha) and the quadrature (F, D).
inline std::vector<CheckResult> check_concentration(const CheckOptions& o) {
  std::vector<CheckResult> out;
  const Protocol proto{o.params, FilterSpec::mbnla(1.4, 2.2)};
  const MeritTriple m = conditional_moments(proto, o.prior, o.quad);
  const HeraldedSample hs = sample_effective_prior(proto, o.prior, o.oracle.seed, o.herald_samples);
  std::vector<double> x(hs.alphas.size());
  parallel_for(
      x.size(), [&](std::size_t i) { x[i] = evaluate_point(std::abs(hs.alphas[i]), proto, o.quad).f_succ; },
      o.workers);
  const double n = static_cast<double>(x.size());
  auto fraction_at_least = [&](double t) {
    return static_cast<double>(std::count_if(x.begin(), x.end(), [t](double v) { return v >= t; }));
  };
  for (double lambda : o.lambdas) {
    const double frac = fraction_at_least(m.F - lambda * m.D) / n;
    const double se = std::sqrt(frac * (1.0 - frac) / n);
    out.push_back(detail::at_least("cantelli_lambda_" + detail::fmt(lambda), frac,
                                   cantelli_guarantee(lambda) - 3.0 * se,
                                   "fraction with X >= F - lambda D vs lambda^2/(1+lambda^2) - 3 se"));
  }
  const double delta = 2.0 * m.D;
  const double hits = fraction_at_least(m.F - delta);
  const double cond = hits / n;
  const double cond_se = std::sqrt(cond * (1.0 - cond) / n);
  out.push_back(detail::at_least("chebyshev_conditional", cond, 1.0 - m.D * m.D / (delta * delta) - 3.0 * cond_se,
                                 "delta = 2D, fraction of successes with X >= F - delta"));
  const double trials = static_cast<double>(hs.trials);
  const double thr = hits / trials;
  const double thr_se = std::sqrt(thr * (1.0 - thr) / trials);
  out.push_back(detail::at_least("chebyshev_throughput", thr, throughput_bound(m, delta) - 3.0 * thr_se,
                                 "delta = 2D, per-trial fraction vs P (1 - D^2/delta^2) - 3 se"));
  return out;
}

/// Weak-filter slope along theta = 1 - 1/g^2 at m_c = 3 sigma. Linearity
/// (r^2) gates; the intercept and the magnitude against c_MB ~ 4 are soft.
inline std::vector<CheckResult> check_slope(const CheckOptions& o) {
  const SlopeEstimate s =
      slope_estimate(o.params, o.prior, 3.0 * o.prior.sigma(), o.slope_thetas, o.quad, o.workers);
  std::vector<CheckResult> out;
  if (s.inconclusive) {
    out.push_back({"slope_linearity", false, true, 0.0, 0.99, -0.99, s.diagnostic});
    return out;
  }
  out.push_back(detail::at_least("slope_linearity", s.r_squared, 0.99, "r^2 of D on F - f0"));
  const double d_max = *std::max_element(s.D_values.begin(), s.D_values.end());
  CheckResult icpt = detail::at_most("slope_intercept", std::abs(s.intercept), 0.1 * d_max,
                                     "|intercept| vs 0.1 max D; D(theta = 0) = " + detail::fmt(s.D0));
  icpt.gating = false;
  out.push_back(icpt);
  out.push_back({"slope_magnitude", true, false, s.slope_c, 4.0, 0.0,
                 "regression slope " + detail::fmt(s.slope_c) + ", smallest-theta ratio " +
                     detail::fmt(s.ratio_small_theta) + ", reference c_MB ~ 4"});
  return out;
}

inline std::vector<CheckResult> run_checks(const CheckOptions& o) {
  std::vector<CheckResult> all{check_flatness(o), check_futility(o), check_tail_bound(o), check_phase_invariance(o)};
  auto append = [&](std::vector<CheckResult> v) { all.insert(all.end(), v.begin(), v.end()); };
  append(check_ensemble(o));
  if (o.with_oracle) {
    append(check_oracle(o));
    append(check_concentration(o));
  }
  if (o.with_slope) append(check_slope(o));
  return all;
}

inline bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed || !r.gating; });
}

}  // namespace cvtrade
