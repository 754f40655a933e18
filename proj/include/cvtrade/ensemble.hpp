#pragma once

// Ensemble figures of merit over the coherent-state prior, conditioned on
// heralding success: (F, D, P_succ), the success-reweighted prior, the
// selectivity indices and the information functionals of the success flag,
// plus the Cantelli / Chebyshev guarantees built on (F, D).
//
// Every ensemble quantity of one protocol is a weighted sum over the same
// radial Gauss-Legendre grid, so the whole report comes from one evaluation.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvtrade/model.hpp"
#include "cvtrade/parallel.hpp"
#include "cvtrade/profile.hpp"
#include "cvtrade/quadrature.hpp"

namespace cvtrade {

struct MeritTriple {
  double F = 0.0;
  double D = 0.0;
  double P_succ = 1.0;
};

struct SelectivityReport {
  double S = 0.0;          // dispersion index, identical to D
  double S1 = 0.0;         // mean |d f_succ / d r| under the effective prior
  double S2 = 0.0;         // variance of ln f_succ under the effective prior
  double I_sel = 0.0;      // KL(effective prior || prior), nats
  double I_alpha_S = 0.0;  // mutual information input <-> success flag, nats
};

/// Values within this distance below zero are round-off and clamp to 0;
/// anything more negative is a defect and throws.
inline constexpr double kRoundoffFloor = 1e-12;

inline double clamp_roundoff(double x, const char* what) {
  if (x >= 0.0) return x;
  if (x >= -kRoundoffFloor) return 0.0;
  throw std::logic_error(std::string(what) + " negative beyond round-off: " + std::to_string(x));
}

/// h2(x) = -x ln x - (1-x) ln(1-x) in nats, h2(0) = h2(1) = 0.
inline double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("binary_entropy: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log(x) - (1.0 - x) * std::log1p(-x);
}

/// h2 of exp(log_x), accurate for x near 0 and near 1.
inline double binary_entropy_from_log(double log_x) {
  if (log_x >= 0.0 || log_x == kNegInf) return 0.0;
  const double x = std::exp(log_x);
  const double one_minus = -std::expm1(log_x);
  return -x * log_x - one_minus * std::log(one_minus);
}

struct EnsembleOptions {
  bool with_slopes = true;
  double slope_step = 1e-3;
  double panel_width = 1.0;  // radial grid panel width in units of |alpha|
  unsigned workers = 0;
};

struct EnsembleSummary {
  MeritTriple merit;
  SelectivityReport report;
  double second_moment = 0.0;  // E_eff[f_succ^2], computed independently of D
  double log_p_succ = 0.0;
  bool converged = true;
  RadialGrid grid;
  std::vector<PointValue> points;
  std::vector<double> slopes;  // |d f_succ / d r| at the grid nodes (empty without slopes)
};

namespace detail {

/// |f'(r)|: central difference, or the second-order forward stencil when
/// r - step would leave the half-line.
template <class Eval>
double radial_slope(double r, double f_here, double step, Eval&& f_at) {
  if (r >= step) return std::abs((f_at(r + step) - f_at(r - step)) / (2.0 * step));
  return std::abs((-3.0 * f_here + 4.0 * f_at(r + step) - f_at(r + 2.0 * step)) / (2.0 * step));
}

}  // namespace detail

inline EnsembleSummary evaluate_ensemble(const Protocol& proto, const PriorSpec& prior, const QuadConfig& cfg,
                                         const EnsembleOptions& opt = {}) {
  cfg.validate();
  if (opt.with_slopes && !(opt.slope_step > 0.0)) throw std::invalid_argument("slope_step must be > 0");

  EnsembleSummary out;
  out.grid = make_radial_grid(prior, default_radial_cutoff(proto.filter, proto.params, prior, cfg), cfg,
                              opt.panel_width);
  const std::size_t n = out.grid.nodes.size();
  out.points.resize(n);
  if (opt.with_slopes) out.slopes.resize(n);
  std::vector<char> ok(n, 1);

  parallel_for(
      n,
      [&](std::size_t j) {
        const double r = out.grid.nodes[j];
        out.points[j] = evaluate_point(r, proto, cfg);
        bool good = out.points[j].converged;
        if (opt.with_slopes) {
          out.slopes[j] = detail::radial_slope(r, out.points[j].f_succ, opt.slope_step, [&](double x) {
            const PointValue pv = evaluate_point(x, proto, cfg);
            good = good && pv.converged;
            return pv.f_succ;
          });
        }
        ok[j] = good;
      },
      opt.workers);
  for (char c : ok) out.converged = out.converged && c;

  // Effective-prior weights exp(log w_j + log P_j - log P).
  std::vector<double> log_joint(n);
  for (std::size_t j = 0; j < n; ++j) log_joint[j] = out.grid.log_weights[j] + out.points[j].log_p_succ;
  out.log_p_succ = log_sum_guard(log_joint);
  std::vector<double> eff(n);
  for (std::size_t j = 0; j < n; ++j) eff[j] = std::exp(log_joint[j] - out.log_p_succ);

  double F = 0.0, M2 = 0.0, mean_log_f = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double f = out.points[j].f_succ;
    F += eff[j] * f;
    M2 += eff[j] * f * f;
    mean_log_f += eff[j] * out.points[j].log_f_succ;
  }
  double var = 0.0, var_log = 0.0, s1 = 0.0, i_sel = 0.0, mean_h2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = out.points[j].f_succ - F;
    const double dl = out.points[j].log_f_succ - mean_log_f;
    var += eff[j] * d * d;
    var_log += eff[j] * dl * dl;
    if (opt.with_slopes) s1 += eff[j] * out.slopes[j];
    if (eff[j] > 0.0) i_sel += eff[j] * (out.points[j].log_p_succ - out.log_p_succ);
    mean_h2 += std::exp(out.grid.log_weights[j]) * binary_entropy_from_log(out.points[j].log_p_succ);
  }

  const double D = std::sqrt(clamp_roundoff(var, "fidelity variance"));
  out.merit = {F, D, std::exp(out.log_p_succ)};
  out.second_moment = M2;
  out.report.S = D;
  out.report.S1 = s1;
  out.report.S2 = clamp_roundoff(var_log, "log-fidelity variance");
  out.report.I_sel = clamp_roundoff(i_sel, "selectivity divergence");
  out.report.I_alpha_S =
      clamp_roundoff(binary_entropy_from_log(out.log_p_succ) - mean_h2, "heralding mutual information");
  return out;
}

inline MeritTriple conditional_moments(const Protocol& proto, const PriorSpec& prior, const QuadConfig& cfg) {
  return evaluate_ensemble(proto, prior, cfg, {.with_slopes = false}).merit;
}

/// p_sigma(alpha) P_succ(alpha) / P_succ at |alpha| = r, against d^2 alpha.
inline double effective_prior_density(double r, const Protocol& proto, const PriorSpec& prior,
                                      const QuadConfig& cfg) {
  const EnsembleSummary ens = evaluate_ensemble(proto, prior, cfg, {.with_slopes = false});
  const PointValue pv = evaluate_point(r, proto, cfg);
  return prior.density(r) * std::exp(pv.log_p_succ - ens.log_p_succ);
}

inline SelectivityReport selectivity_indices(const Protocol& proto, const PriorSpec& prior, const QuadConfig& cfg,
                                             double slope_step = 1e-3) {
  return evaluate_ensemble(proto, prior, cfg, {.with_slopes = true, .slope_step = slope_step}).report;
}

/// h2(P_succ) - E_prior[h2(P_succ(alpha))].
inline double heralding_mutual_information(const Protocol& proto, const PriorSpec& prior, const QuadConfig& cfg) {
  return evaluate_ensemble(proto, prior, cfg, {.with_slopes = false}).report.I_alpha_S;
}

/// E_eff[ln P_succ(alpha)] - ln P_succ.
inline double selectivity_divergence(const Protocol& proto, const PriorSpec& prior, const QuadConfig& cfg) {
  return evaluate_ensemble(proto, prior, cfg, {.with_slopes = false}).report.I_sel;
}

/// Confidence weight lambda, its Cantelli level eta = lambda^2/(1+lambda^2),
/// and the fidelity slack delta of the throughput bound.
struct RobustObjective {
  double lambda = 3.0;
  double eta = 0.9;
  double delta = 0.05;

  static RobustObjective make(double lambda, double delta) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be > 0");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("delta must be > 0");
    return {lambda, lambda * lambda / (1.0 + lambda * lambda), delta};
  }
};

/// J_lambda = F - lambda D.
inline double robust_objective(const MeritTriple& merit, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  return merit.F - lambda * merit.D;
}

/// Fraction of successful runs guaranteed to reach J_lambda.
inline double cantelli_guarantee(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  return lambda * lambda / (1.0 + lambda * lambda);
}

inline double cantelli_lambda_for(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0, 1)");
  return std::sqrt(eta / (1.0 - eta));
}

/// Per-trial probability of a successful output with fidelity >= F - delta,
/// lower-bounded by P_succ (1 - D^2/delta^2).
inline double throughput_bound(const MeritTriple& merit, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
  return std::max(0.0, merit.P_succ * (1.0 - merit.D * merit.D / (delta * delta)));
}

}  // namespace cvtrade
