#pragma once

// Deterministic quadrature: Gauss-Legendre panels with global adaptive
// bisection, a polar integral over the filter's acceptance disk with exactly
// solved angular arcs, and radial averages against the coherent-state prior.
//
// Integrands hand back Scaled values (mantissa times exp(log scale)), so
// integrals whose magnitude is far below the double range stay finite and
// ratios of two such integrals remain order one.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "cvtrade/model.hpp"

namespace cvtrade {

struct QuadConfig {
  int radial_order = 16;
  int angular_order = 16;
  int panels = 1;
  double rel_tol = 1e-9;
  double abs_tol = 1e-14;
  double prior_trunc_eps = 1e-12;
  int max_panels = 512;  // per adaptive integral

  void validate() const {
    if (radial_order < 8) throw std::invalid_argument("quad.radial_order must be >= 8");
    if (angular_order < 8) throw std::invalid_argument("quad.angular_order must be >= 8");
    if (panels < 1) throw std::invalid_argument("quad.panels must be >= 1");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("quad.rel_tol must be > 0");
    if (!(abs_tol > 0.0)) throw std::invalid_argument("quad.abs_tol must be > 0");
    if (!(prior_trunc_eps > 0.0) || prior_trunc_eps >= 1.0)
      throw std::invalid_argument("quad.prior_trunc_eps must lie in (0, 1)");
    if (max_panels < panels) throw std::invalid_argument("quad.max_panels must be >= quad.panels");
  }

  /// Same tolerances, doubled node counts; used for grid-convergence checks.
  QuadConfig refined() const {
    QuadConfig c = *this;
    c.radial_order *= 2;
    c.angular_order *= 2;
    return c;
  }
};

/// Non-negative-or-signed real stored as mant * exp(lg).
struct Scaled {
  double mant = 0.0;
  double lg = 0.0;

  static Scaled from_log(double log_value) {
    if (log_value == kNegInf) return {};
    return {1.0, log_value};
  }
  static Scaled from_value(double v) { return {v, 0.0}; }

  bool is_zero() const { return mant == 0.0; }
  double value() const { return is_zero() ? 0.0 : mant * std::exp(lg); }
  double log_abs() const { return is_zero() ? kNegInf : lg + std::log(std::abs(mant)); }
};

inline Scaled operator+(Scaled a, Scaled b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const double top = std::max(a.lg, b.lg);
  return {a.mant * std::exp(a.lg - top) + b.mant * std::exp(b.lg - top), top};
}
inline Scaled operator-(Scaled a, Scaled b) { return a + Scaled{-b.mant, b.lg}; }
inline Scaled operator*(Scaled a, double w) { return {a.mant * w, a.lg}; }
inline Scaled abs(Scaled a) { return {std::abs(a.mant), a.lg}; }

template <std::size_t K>
using ScaledVec = std::array<Scaled, K>;

/// log(sum(exp(terms))) with the max-shift. Throws on an empty sequence.
inline double log_sum_guard(std::span<const double> log_terms) {
  if (log_terms.empty()) throw std::invalid_argument("log_sum_guard: empty sequence");
  const double top = *std::max_element(log_terms.begin(), log_terms.end());
  if (top == kNegInf) return kNegInf;
  if (std::isinf(top)) return top;
  double acc = 0.0;
  for (double t : log_terms) acc += std::exp(t - top);
  return top + std::log(acc);
}

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

namespace detail {

inline GaussLegendreRule build_gauss_legendre(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace detail

/// Cached n-point Gauss-Legendre rule; safe to call from several threads.
inline const GaussLegendreRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussLegendreRule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussLegendreRule>(detail::build_gauss_legendre(n));
  return *slot;
}

/// Fixed-rule estimate of the integral of f over [lo, hi].
template <std::size_t K, class Fn>
ScaledVec<K> gauss_panel(const GaussLegendreRule& rule, double lo, double hi, Fn&& f) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  const std::size_t n = rule.size();
  std::vector<ScaledVec<K>> vals(n);
  std::array<double, K> top;
  top.fill(kNegInf);
  for (std::size_t i = 0; i < n; ++i) {
    vals[i] = f(mid + half * rule.nodes[i]);
    for (std::size_t k = 0; k < K; ++k)
      if (!vals[i][k].is_zero()) top[k] = std::max(top[k], vals[i][k].lg);
  }
  ScaledVec<K> out{};
  for (std::size_t k = 0; k < K; ++k) {
    if (top[k] == kNegInf) continue;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!vals[i][k].is_zero()) acc += rule.weights[i] * vals[i][k].mant * std::exp(vals[i][k].lg - top[k]);
    out[k] = {acc * half, top[k]};
  }
  return out;
}

template <std::size_t K>
struct IntegralResult {
  ScaledVec<K> value{};
  std::array<double, K> log_error{};  // log of the absolute error estimate
  bool converged = true;
  int panels = 0;

  double rel_error(std::size_t k) const {
    const double lv = value[k].log_abs();
    if (log_error[k] == kNegInf) return 0.0;
    if (lv == kNegInf) return std::numeric_limits<double>::infinity();
    return std::exp(log_error[k] - lv);
  }
};

struct AdaptiveControl {
  int initial_panels = 1;
  double rel_tol = 1e-9;
  double abs_tol = 0.0;  // 0 disables the absolute floor (log-domain work)
  int max_panels = 512;
};

/// Global adaptive Gauss-Legendre: every panel carries the difference between
/// its one-panel and two-half-panel estimates as error; the worst panel
/// (relative to the per-component target) is bisected until the summed error
/// meets max(rel_tol * |I|, abs_tol) in every component or the panel budget
/// runs out, in which case converged is false and the best estimate is kept.
template <std::size_t K, class Fn>
IntegralResult<K> integrate_adaptive(Fn&& f, double a, double b, const GaussLegendreRule& rule,
                                     const AdaptiveControl& ctl) {
  struct Panel {
    double lo, hi;
    ScaledVec<K> coarse, left, right;
    std::array<double, K> log_err;
  };
  auto finish = [&](Panel& p) {
    const double mid = 0.5 * (p.lo + p.hi);
    p.left = gauss_panel<K>(rule, p.lo, mid, f);
    p.right = gauss_panel<K>(rule, mid, p.hi, f);
    for (std::size_t k = 0; k < K; ++k) p.log_err[k] = abs(p.coarse[k] - (p.left[k] + p.right[k])).log_abs();
  };

  IntegralResult<K> res;
  res.log_error.fill(kNegInf);
  if (!(b > a)) return res;

  std::vector<Panel> panels;
  const int n0 = std::max(1, ctl.initial_panels);
  panels.reserve(static_cast<std::size_t>(std::max(ctl.max_panels, n0)) + 2);
  for (int i = 0; i < n0; ++i) {
    Panel p;
    p.lo = a + (b - a) * i / n0;
    p.hi = (i + 1 == n0) ? b : a + (b - a) * (i + 1) / n0;
    p.coarse = gauss_panel<K>(rule, p.lo, p.hi, f);
    finish(p);
    panels.push_back(p);
  }

  const double log_rel = std::log(ctl.rel_tol);
  const double log_abs_floor = ctl.abs_tol > 0.0 ? std::log(ctl.abs_tol) : kNegInf;
  while (true) {
    ScaledVec<K> total{};
    ScaledVec<K> err{};
    for (const Panel& p : panels)
      for (std::size_t k = 0; k < K; ++k) {
        total[k] = total[k] + p.left[k] + p.right[k];
        err[k] = err[k] + Scaled::from_log(p.log_err[k]);
      }
    std::array<double, K> target;
    bool done = true;
    for (std::size_t k = 0; k < K; ++k) {
      target[k] = std::max(log_rel + total[k].log_abs(), log_abs_floor);
      if (err[k].log_abs() > target[k]) done = false;
    }
    res.value = total;
    for (std::size_t k = 0; k < K; ++k) res.log_error[k] = err[k].log_abs();
    res.panels = static_cast<int>(panels.size());
    if (done) {
      res.converged = true;
      return res;
    }
    if (static_cast<int>(panels.size()) >= ctl.max_panels) {
      res.converged = false;
      return res;
    }

    std::size_t worst = 0;
    double worst_score = kNegInf;
    for (std::size_t i = 0; i < panels.size(); ++i)
      for (std::size_t k = 0; k < K; ++k) {
        if (panels[i].log_err[k] == kNegInf) continue;
        const double score = panels[i].log_err[k] - target[k];
        if (score > worst_score) {
          worst_score = score;
          worst = i;
        }
      }

    Panel parent = panels[worst];
    const double mid = 0.5 * (parent.lo + parent.hi);
    if (!(mid > parent.lo && mid < parent.hi)) {  // interval exhausted in double precision
      res.converged = false;
      return res;
    }
    Panel lhs{parent.lo, mid, parent.left, {}, {}, {}};
    Panel rhs{mid, parent.hi, parent.right, {}, {}, {}};
    finish(lhs);
    finish(rhs);
    panels[worst] = lhs;
    panels.push_back(rhs);
  }
}

/// Linear-domain result of a scalar integral.
struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

namespace detail {

/// Half-angle of the accepted arc: for record noise of radius s at input
/// radius r, the record |alpha + n| <= m_c exactly when phi >= phi_lo(s),
/// where phi is measured from the direction of alpha. Factored so that both
/// ends of the partial-arc band stay accurate.
inline double arc_lower_angle(double s, double r, double m_c) {
  const double one_minus_c = (r + s - m_c) * (r + s + m_c) / (2.0 * r * s);
  const double one_plus_c = (m_c - r + s) * (m_c + r - s) / (2.0 * r * s);
  return 2.0 * std::atan2(std::sqrt(std::max(one_minus_c, 0.0)), std::sqrt(std::max(one_plus_c, 0.0)));
}

}  // namespace detail

/// Integral over the acceptance set {n : |alpha + n| <= m_c}, |alpha| = r, of
/// f(s, cos_phi) returning ScaledVec<K>, where s = |n| and phi is the angle
/// between n and alpha. f must be even in phi: the arc [0, pi] is integrated
/// and doubled. The band where the arc is partial is integrated in a
/// cosine-stretched variable that absorbs the square-root endpoint behavior
/// of the arc length.
template <std::size_t K, class Fn>
IntegralResult<K> disk_integral(Fn&& f, double r, double m_c, const QuadConfig& cfg, double abs_tol = 0.0) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("disk_integral: r must be finite and >= 0");
  if (!(m_c > 0.0)) throw std::invalid_argument("disk_integral: m_c must be > 0");

  const GaussLegendreRule& radial = gauss_legendre(cfg.radial_order);
  const GaussLegendreRule& angular = gauss_legendre(cfg.angular_order);
  const AdaptiveControl inner_ctl{cfg.panels, 0.1 * cfg.rel_tol, 0.1 * abs_tol, cfg.max_panels};
  const AdaptiveControl outer_ctl{cfg.panels, cfg.rel_tol, abs_tol, cfg.max_panels};
  bool inner_ok = true;

  auto arc_integral = [&](double s, double phi_lo) {
    auto res = integrate_adaptive<K>([&](double phi) { return f(s, std::cos(phi)); }, phi_lo,
                                     std::numbers::pi, angular, inner_ctl);
    inner_ok = inner_ok && res.converged;
    return res.value;
  };

  IntegralResult<K> total;
  auto accumulate = [&](const IntegralResult<K>& part) {
    for (std::size_t k = 0; k < K; ++k) {
      total.value[k] = total.value[k] + part.value[k];
      total.log_error[k] =
          (Scaled::from_log(total.log_error[k]) + Scaled::from_log(part.log_error[k])).log_abs();
    }
    total.converged = total.converged && part.converged;
    total.panels += part.panels;
  };
  total.log_error.fill(kNegInf);

  const double full_end = std::max(0.0, m_c - r);
  if (r == 0.0 || full_end > 0.0) {
    const double s_hi = (r == 0.0) ? m_c : full_end;
    auto full = integrate_adaptive<K>(
        [&](double s) {
          ScaledVec<K> v = arc_integral(s, 0.0);
          for (auto& x : v) x = x * (2.0 * s);
          return v;
        },
        0.0, s_hi, radial, outer_ctl);
    accumulate(full);
  }

  if (r > 0.0) {
    const double lo = std::abs(m_c - r);
    const double hi = m_c + r;
    const double span = hi - lo;
    auto partial = integrate_adaptive<K>(
        [&](double t) {
          const double s = lo + span * 0.5 * (1.0 - std::cos(std::numbers::pi * t));
          const double ds_dt = span * 0.5 * std::numbers::pi * std::sin(std::numbers::pi * t);
          if (!(s > 0.0) || !(ds_dt > 0.0)) return ScaledVec<K>{};
          ScaledVec<K> v = arc_integral(s, detail::arc_lower_angle(s, r, m_c));
          for (auto& x : v) x = x * (2.0 * s * ds_dt);
          return v;
        },
        0.0, 1.0, radial, outer_ctl);
    accumulate(partial);
  }

  total.converged = total.converged && inner_ok;
  return total;
}

/// Linear-domain disk integral of a real integrand f(s, cos_phi); see
/// disk_integral for the geometry. Honors cfg.abs_tol.
template <class Fn>
QuadResult disk_average(Fn&& f, double r, double m_c, const QuadConfig& cfg) {
  auto res = disk_integral<1>([&](double s, double cphi) { return ScaledVec<1>{Scaled::from_value(f(s, cphi))}; },
                              r, m_c, cfg, cfg.abs_tol);
  return {res.value[0].value(), std::exp(res.log_error[0]), res.converged};
}

/// Radius beyond which the prior-weighted integrands are negligible: the
/// prior tail alone for the control, plus the cut-off and six noise standard
/// deviations for a filter (P_succ(r) <= exp(-(r - m_c)^2 / V_n) past m_c).
inline double default_radial_cutoff(const FilterSpec& filter, const SurrogateParams& params,
                                    const PriorSpec& prior, const QuadConfig& cfg) {
  const double prior_part = prior.sigma() * std::sqrt(2.0 * std::log(1.0 / cfg.prior_trunc_eps));
  if (filter.is_accept_all()) return prior_part;
  return filter.cutoff() + 6.0 * std::sqrt(params.v_n()) + prior_part;
}

/// Integral over [0, inf) of (2 r / sigma^2) exp(-r^2 / sigma^2) gfun(r),
/// truncated at max(r_max_hint, sigma * sqrt(2 ln(1/eps))). The truncation is
/// validated by integrating the next interval [r_max, 2 r_max]; a tail above
/// prior_trunc_eps clears the converged flag.
template <class Fn>
QuadResult radial_prior_average(Fn&& gfun, const PriorSpec& prior, double r_max_hint, const QuadConfig& cfg) {
  if (!(r_max_hint >= 0.0)) throw std::invalid_argument("radial_prior_average: r_max_hint must be >= 0");
  const double s2 = prior.sigma() * prior.sigma();
  const double r_max =
      std::max(r_max_hint, prior.sigma() * std::sqrt(2.0 * std::log(1.0 / cfg.prior_trunc_eps)));
  auto integrand = [&](double r) {
    const double g = gfun(r);
    if (g == 0.0 || r <= 0.0) return ScaledVec<1>{};
    return ScaledVec<1>{Scaled{g * 2.0 * r / s2, -r * r / s2}};
  };
  const GaussLegendreRule& rule = gauss_legendre(cfg.radial_order);
  const int n0 = std::max(cfg.panels, static_cast<int>(std::ceil(r_max / prior.sigma())));
  const AdaptiveControl ctl{n0, cfg.rel_tol, cfg.abs_tol, std::max(cfg.max_panels, 2 * n0)};
  auto body = integrate_adaptive<1>(integrand, 0.0, r_max, rule, ctl);
  auto tail = integrate_adaptive<1>(integrand, r_max, 2.0 * r_max, rule, ctl);

  QuadResult out;
  out.value = body.value[0].value();
  out.error = std::exp(body.log_error[0]) + std::abs(tail.value[0].value());
  out.converged = body.converged && std::abs(tail.value[0].value()) <= cfg.prior_trunc_eps;
  return out;
}

/// Fixed composite Gauss-Legendre grid in r = |alpha| carrying normalized
/// log-weights of the radial prior; ensemble functionals are weighted sums
/// over one shared set of nodes.
struct RadialGrid {
  std::vector<double> nodes;
  std::vector<double> log_weights;  // log of prior mass per node, sums to 1
  double r_max = 0.0;
};

inline RadialGrid make_radial_grid(const PriorSpec& prior, double r_max, const QuadConfig& cfg,
                                   double panel_width = 0.5) {
  if (!(r_max > 0.0)) throw std::invalid_argument("make_radial_grid: r_max must be > 0");
  const GaussLegendreRule& rule = gauss_legendre(cfg.radial_order);
  const int panels = std::max(cfg.panels, static_cast<int>(std::ceil(r_max / panel_width)));
  const double s2 = prior.sigma() * prior.sigma();
  RadialGrid grid;
  grid.r_max = r_max;
  grid.nodes.reserve(panels * rule.size());
  grid.log_weights.reserve(panels * rule.size());
  for (int p = 0; p < panels; ++p) {
    const double lo = r_max * p / panels;
    const double hi = r_max * (p + 1) / panels;
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double r = mid + half * rule.nodes[i];
      grid.nodes.push_back(r);
      grid.log_weights.push_back(std::log(rule.weights[i] * half * 2.0 * r / s2) - r * r / s2);
    }
  }
  const double norm = log_sum_guard(grid.log_weights);
  for (double& lw : grid.log_weights) lw -= norm;
  return grid;
}

}  // namespace cvtrade
