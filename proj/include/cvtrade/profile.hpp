#pragma once

// Single-shot conditional quantities as functions of the input amplitude:
// heralding probability P_succ(r), conditional fidelity f_succ(r), the
// finite-cut-off tail bound and tabulated profiles.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "cvtrade/model.hpp"
#include "cvtrade/parallel.hpp"
#include "cvtrade/quadrature.hpp"

namespace cvtrade {

struct Protocol {
  SurrogateParams params;
  FilterSpec filter;

  /// Accept-all control on the given noise model: the surrogate analogue of a
  /// displacement-covariant teleporter.
  bool covariant() const { return filter.is_accept_all(); }
};

/// Everything computed at one input radius from a single shared set of nodes.
struct PointValue {
  double p_succ = 1.0;
  double log_p_succ = 0.0;  // finite even where p_succ underflows
  double f_succ = 0.0;
  double log_f_succ = 0.0;
  double rel_error = 0.0;  // largest relative error estimate of the two integrals
  bool converged = true;
};

struct SuccessProbability {
  double value = 1.0;
  double log_value = 0.0;
  bool converged = true;
};

struct Estimate {
  double value = 0.0;
  double rel_error = 0.0;
  bool converged = true;
};

/// Numerator and denominator of the fidelity ratio share every node, so their
/// discretization errors largely cancel in f_succ.
inline PointValue evaluate_point(double r, const Protocol& proto, const QuadConfig& cfg) {
  if (!std::isfinite(r) || r < 0.0) throw std::invalid_argument("input radius must be finite and >= 0");
  const SurrogateParams& p = proto.params;
  PointValue out;
  if (proto.filter.is_accept_all()) {
    out.f_succ = deterministic_baseline(p);
    out.log_f_succ = std::log(out.f_succ);
    return out;
  }
  if (!(p.v_n() > 0.0)) throw std::invalid_argument("a filtered protocol needs V_n > 0");

  const double v_n = p.v_n();
  const double penalty = p.overlap_penalty();
  const double theta = proto.filter.theta();
  const double m_c = proto.filter.cutoff();
  const double mc2 = m_c * m_c;
  const double log_norm = -std::log(std::numbers::pi * v_n);
  const double r2 = r * r;

  auto integrand = [&](double s, double cos_phi) {
    const double rho2 = r2 + s * s + 2.0 * r * s * cos_phi;
    const double log_den = log_norm - s * s / v_n + theta * std::min(rho2 - mc2, 0.0);
    return ScaledVec<2>{Scaled::from_log(log_den), Scaled::from_log(log_den - penalty * s * s)};
  };
  const auto res = disk_integral<2>(integrand, r, m_c, cfg);

  const double log_den = res.value[0].log_abs();
  const double log_num = res.value[1].log_abs();
  out.log_p_succ = log_den;
  out.p_succ = std::exp(log_den);
  out.log_f_succ = log_num - log_den - std::log1p(p.v_eps());
  out.f_succ = std::exp(out.log_f_succ);
  out.rel_error = std::max(res.rel_error(0), res.rel_error(1));
  out.converged = res.converged && std::isfinite(log_den) && std::isfinite(log_num);
  return out;
}

inline SuccessProbability success_probability(double r, const Protocol& proto, const QuadConfig& cfg) {
  const PointValue pv = evaluate_point(r, proto, cfg);
  return {pv.p_succ, pv.log_p_succ, pv.converged};
}

inline Estimate conditional_fidelity(double r, const Protocol& proto, const QuadConfig& cfg) {
  const PointValue pv = evaluate_point(r, proto, cfg);
  return {pv.f_succ, pv.rel_error, pv.converged};
}

/// (1/(1+V_eps)) exp(-kappa^2 (r - m_c)^2 / (1+V_eps)) for r >= m_c. Throws
/// for the accept-all control or r < m_c.
inline double tail_bound(double r, const Protocol& proto) {
  return tail_fidelity_bound(r, proto.params, proto.filter);
}

struct FidelityProfile {
  std::vector<double> radii;
  std::vector<double> f_succ;
  std::vector<double> p_succ;
  std::vector<double> log_p_succ;
  std::vector<bool> converged;

  std::size_t size() const { return radii.size(); }
  bool all_converged() const {
    for (bool c : converged)
      if (!c) return false;
    return true;
  }
};

/// 121 evenly spaced radii on [0, m_c + 3]; [0, 6] for the control.
inline std::vector<double> default_profile_radii(const FilterSpec& filter, int points = 121) {
  if (points < 2) throw std::invalid_argument("profile grid needs at least two points");
  const double r_max = filter.is_accept_all() ? 6.0 : filter.cutoff() + 3.0;
  std::vector<double> radii(points);
  for (int i = 0; i < points; ++i) radii[i] = r_max * i / (points - 1);
  return radii;
}

inline FidelityProfile profile_table(const std::vector<double>& radii, const Protocol& proto,
                                     const QuadConfig& cfg, unsigned workers = 0) {
  if (radii.empty()) throw std::invalid_argument("profile_table: empty radius grid");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!std::isfinite(radii[i]) || radii[i] < 0.0)
      throw std::invalid_argument("profile_table: radii must be finite and >= 0");
    if (i > 0 && !(radii[i] > radii[i - 1]))
      throw std::invalid_argument("profile_table: radii must be strictly ascending");
  }
  std::vector<PointValue> points(radii.size());
  parallel_for(radii.size(), [&](std::size_t i) { points[i] = evaluate_point(radii[i], proto, cfg); }, workers);
  FidelityProfile prof;
  prof.radii = radii;
  for (const PointValue& pv : points) {
    prof.f_succ.push_back(pv.f_succ);
    prof.p_succ.push_back(pv.p_succ);
    prof.log_p_succ.push_back(pv.log_p_succ);
    prof.converged.push_back(pv.converged);
  }
  return prof;
}

/// Conditional fidelity at a complex amplitude from a full two-dimensional
/// integral over the record plane m = rho e^{i psi} (no use of the radial
/// symmetry): independent of evaluate_point and meant for cross-checks.
inline Estimate phase_invariance_probe(Complex alpha, const Protocol& proto, const QuadConfig& cfg) {
  const SurrogateParams& p = proto.params;
  if (!(p.v_n() > 0.0)) throw std::invalid_argument("phase_invariance_probe needs V_n > 0");
  const double v_n = p.v_n();
  const double penalty = p.overlap_penalty();
  const double log_norm = -std::log(std::numbers::pi * v_n);
  // The control has no disk; integrate far enough that exp(-|n|^2/V_n) < e^-80.
  const double radius =
      proto.filter.is_accept_all() ? std::abs(alpha) + std::sqrt(80.0 * v_n) : proto.filter.cutoff();

  const GaussLegendreRule& radial = gauss_legendre(cfg.radial_order);
  const GaussLegendreRule& angular = gauss_legendre(cfg.angular_order);
  const AdaptiveControl inner_ctl{std::max(cfg.panels, 4), 0.1 * cfg.rel_tol, 0.0, cfg.max_panels};
  const AdaptiveControl outer_ctl{cfg.panels, cfg.rel_tol, 0.0, cfg.max_panels};
  bool inner_ok = true;

  auto ring = [&](double rho) {
    auto res = integrate_adaptive<2>(
        [&](double psi) {
          const Complex m = std::polar(rho, psi);
          const double n2 = std::norm(m - alpha);
          const double log_den = log_norm - n2 / v_n + log_filter_weight_sq(rho * rho, proto.filter);
          return ScaledVec<2>{Scaled::from_log(log_den), Scaled::from_log(log_den - penalty * n2)};
        },
        0.0, 2.0 * std::numbers::pi, angular, inner_ctl);
    inner_ok = inner_ok && res.converged;
    for (auto& v : res.value) v = v * rho;
    return res.value;
  };
  const auto res = integrate_adaptive<2>(ring, 0.0, radius, radial, outer_ctl);
  const double log_den = res.value[0].log_abs();
  const double log_num = res.value[1].log_abs();
  return {std::exp(log_num - log_den) / (1.0 + p.v_eps()), std::max(res.rel_error(0), res.rel_error(1)),
          res.converged && inner_ok};
}

}  // namespace cvtrade
