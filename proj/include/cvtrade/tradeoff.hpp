#pragma once

// (g, m_c) sweeps, the weak-filter universality-cost slope, Pareto frontiers
// and constrained / robust operating-point selection.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "cvtrade/ensemble.hpp"
#include "cvtrade/model.hpp"
#include "cvtrade/parallel.hpp"
#include "cvtrade/quadrature.hpp"

namespace cvtrade {

enum class QuadFlag { kConverged, kNotConverged, kFailed };

inline const char* to_string(QuadFlag f) {
  switch (f) {
    case QuadFlag::kConverged: return "ok";
    case QuadFlag::kNotConverged: return "nonconverged";
    case QuadFlag::kFailed: return "failed";
  }
  return "failed";
}

/// One grid point. The accept-all control row carries g = 1, m_c = +inf.
struct SweepRecord {
  double g = 1.0;
  double m_c = std::numeric_limits<double>::infinity();
  MeritTriple merit;
  SelectivityReport report;
  double J_lambda = 0.0;
  QuadFlag quad_flags = QuadFlag::kConverged;
  std::string message;  // exception text when quad_flags == kFailed

  bool is_control() const { return std::isinf(m_c); }
  FilterSpec filter() const { return is_control() ? FilterSpec::accept_all() : FilterSpec::mbnla(g, m_c); }
};

struct SweepOptions {
  bool include_control = false;  // append the accept-all row after the grid
  bool with_slopes = true;
  unsigned workers = 0;
};

inline SweepRecord evaluate_record(const FilterSpec& filter, const SurrogateParams& params, const PriorSpec& prior,
                                   double lambda, const QuadConfig& cfg, bool with_slopes = true) {
  SweepRecord rec;
  if (!filter.is_accept_all()) {
    rec.g = filter.gain();
    rec.m_c = filter.cutoff();
  }
  try {
    // Points inside one record run serially; the sweep parallelizes records.
    const EnsembleSummary ens =
        evaluate_ensemble({params, filter}, prior, cfg, {.with_slopes = with_slopes, .workers = 1});
    rec.merit = ens.merit;
    rec.report = ens.report;
    rec.J_lambda = robust_objective(ens.merit, lambda);
    rec.quad_flags = ens.converged ? QuadFlag::kConverged : QuadFlag::kNotConverged;
  } catch (const std::exception& e) {
    rec.quad_flags = QuadFlag::kFailed;
    rec.message = e.what();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.merit = {nan, nan, nan};
    rec.report = {nan, nan, nan, nan, nan};
    rec.J_lambda = nan;
  }
  return rec;
}

/// Row-major over g then m_c. Per-point failures are flagged, never thrown.
inline std::vector<SweepRecord> sweep(const std::vector<double>& g_grid, const std::vector<double>& m_c_grid,
                                      const SurrogateParams& params, const PriorSpec& prior, double lambda,
                                      const QuadConfig& cfg, const SweepOptions& opt = {}) {
  if (g_grid.empty() || m_c_grid.empty()) throw std::invalid_argument("sweep: g and m_c grids must be nonempty");
  if (!(lambda > 0.0)) throw std::invalid_argument("sweep: lambda must be > 0");
  cfg.validate();
  std::vector<FilterSpec> filters;
  for (double g : g_grid)
    for (double m_c : m_c_grid) filters.push_back(FilterSpec::mbnla(g, m_c));
  if (opt.include_control) filters.push_back(FilterSpec::accept_all());

  std::vector<SweepRecord> out(filters.size());
  parallel_for(
      filters.size(),
      [&](std::size_t i) { out[i] = evaluate_record(filters[i], params, prior, lambda, cfg, opt.with_slopes); },
      opt.workers);
  return out;
}

struct SlopeEstimate {
  std::vector<double> theta_values;
  std::vector<double> F_values;
  std::vector<double> D_values;
  double f0 = 0.0;  // computed F of the theta = 0 hard disk
  double D0 = 0.0;  // computed D of the theta = 0 hard disk
  double slope_c = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double r_squared = std::numeric_limits<double>::quiet_NaN();
  double ratio_small_theta = std::numeric_limits<double>::quiet_NaN();  // D / (F - f0) at the smallest theta
  bool inconclusive = false;
  bool converged = true;
  std::string diagnostic;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope x + intercept.
inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares: need >= 2 matched points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares: degenerate abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  return fit;
}

/// Regression of D(theta) on F(theta) - f0 along the family
/// FilterSpec::deformation(theta, m_c_fixed) at the given theta values.
inline SlopeEstimate slope_estimate(const SurrogateParams& params, const PriorSpec& prior, double m_c_fixed,
                                    const std::vector<double>& thetas, const QuadConfig& cfg, unsigned workers = 0) {
  if (thetas.size() < 4) throw std::invalid_argument("slope_estimate: need at least 4 theta values");
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (!(thetas[i] > 0.0 && thetas[i] < 1.0)) throw std::invalid_argument("slope_estimate: theta must lie in (0, 1)");
    if (i > 0 && !(thetas[i] > thetas[i - 1])) throw std::invalid_argument("slope_estimate: thetas must ascend");
  }
  std::vector<double> all{0.0};
  all.insert(all.end(), thetas.begin(), thetas.end());
  std::vector<EnsembleSummary> ens(all.size());
  parallel_for(
      all.size(),
      [&](std::size_t i) {
        ens[i] = evaluate_ensemble({params, FilterSpec::deformation(all[i], m_c_fixed)}, prior, cfg,
                                   {.with_slopes = false, .workers = 1});
      },
      workers);

  SlopeEstimate est;
  est.theta_values = thetas;
  est.f0 = ens[0].merit.F;
  est.D0 = ens[0].merit.D;
  std::vector<double> dF;
  for (std::size_t i = 1; i < ens.size(); ++i) {
    est.F_values.push_back(ens[i].merit.F);
    est.D_values.push_back(ens[i].merit.D);
    dF.push_back(ens[i].merit.F - est.f0);
    est.converged = est.converged && ens[i].converged;
  }
  est.converged = est.converged && ens[0].converged;

  const bool degenerate = std::all_of(dF.begin(), dF.end(), [](double d) { return std::abs(d) < 1e-12; });
  if (degenerate) {
    est.inconclusive = true;
    est.diagnostic = "all F - f0 below 1e-12; the family does not move F";
    return est;
  }
  const LinearFit fit = least_squares(dF, est.D_values);
  est.slope_c = fit.slope;
  est.intercept = fit.intercept;
  est.r_squared = fit.r_squared;
  est.ratio_small_theta = est.D_values.front() / dF.front();
  est.diagnostic = "regression and smallest-theta ratio differ by " +
                   std::to_string(std::abs(est.slope_c - est.ratio_small_theta));
  return est;
}

/// theta values {theta_max / 2^(n-1), ..., theta_max / 2, theta_max}.
inline std::vector<double> geometric_thetas(double theta_max, int n_points) {
  if (n_points < 4) throw std::invalid_argument("need at least 4 theta values");
  if (!(theta_max > 0.0 && theta_max < 1.0)) throw std::invalid_argument("theta_max must lie in (0, 1)");
  std::vector<double> t(n_points);
  for (int i = 0; i < n_points; ++i) t[i] = theta_max / std::ldexp(1.0, n_points - 1 - i);
  return t;
}

/// a weakly dominates b: no worse in F, D and P_succ and strictly better in one.
inline bool dominates(const MeritTriple& a, const MeritTriple& b) {
  const bool no_worse = a.F >= b.F && a.D <= b.D && a.P_succ >= b.P_succ;
  const bool better = a.F > b.F || a.D < b.D || a.P_succ > b.P_succ;
  return no_worse && better;
}

namespace detail {

inline bool usable(const SweepRecord& r) {
  return r.quad_flags != QuadFlag::kFailed && std::isfinite(r.merit.F) && std::isfinite(r.merit.D) &&
         std::isfinite(r.merit.P_succ);
}

/// Tie-break order shared by the selectors: smaller D, larger P_succ, then
/// smaller (g, m_c).
inline bool tie_less(const SweepRecord& a, const SweepRecord& b) {
  return std::tuple(a.merit.D, -a.merit.P_succ, a.g, a.m_c) < std::tuple(b.merit.D, -b.merit.P_succ, b.g, b.m_c);
}

template <class Score, class Feasible>
std::optional<SweepRecord> best_by(const std::vector<SweepRecord>& records, Score&& score, Feasible&& feasible) {
  const SweepRecord* best = nullptr;
  double best_score = 0.0;
  for (const SweepRecord& r : records) {
    if (!usable(r) || !feasible(r)) continue;
    const double s = score(r);
    if (!best || s > best_score || (s == best_score && tie_less(r, *best))) {
      best = &r;
      best_score = s;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

}  // namespace detail

/// Undominated records sorted by F descending; exact duplicates all survive.
inline std::vector<SweepRecord> pareto_frontier(const std::vector<SweepRecord>& records) {
  std::vector<SweepRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!detail::usable(records[i])) continue;
    bool dominated = false;
    for (std::size_t j = 0; j < records.size() && !dominated; ++j)
      dominated = j != i && detail::usable(records[j]) && dominates(records[j].merit, records[i].merit);
    if (!dominated) out.push_back(records[i]);
  }
  std::stable_sort(out.begin(), out.end(), [](const SweepRecord& a, const SweepRecord& b) {
    if (a.merit.F != b.merit.F) return a.merit.F > b.merit.F;
    return detail::tie_less(a, b);
  });
  return out;
}

/// argmax F subject to D <= D_max and P_succ >= P_min.
inline std::optional<SweepRecord> constrained_best(const std::vector<SweepRecord>& records, double D_max,
                                                   double P_min) {
  if (!(D_max >= 0.0)) throw std::invalid_argument("D_max must be >= 0");
  if (!(P_min >= 0.0 && P_min <= 1.0)) throw std::invalid_argument("P_min must lie in [0, 1]");
  return detail::best_by(
      records, [](const SweepRecord& r) { return r.merit.F; },
      [&](const SweepRecord& r) { return r.merit.D <= D_max && r.merit.P_succ >= P_min; });
}

/// argmax F - lambda D.
inline SweepRecord objective_best(const std::vector<SweepRecord>& records, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  auto best = detail::best_by(
      records, [lambda](const SweepRecord& r) { return robust_objective(r.merit, lambda); },
      [](const SweepRecord&) { return true; });
  if (!best) throw std::invalid_argument("objective_best: no usable record");
  return *best;
}

}  // namespace cvtrade
