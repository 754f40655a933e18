#pragma once

// Scalar primitives of the correlated-Gaussian teleportation surrogate.
//
// The Bell record is m = alpha + n with n circular complex Gaussian of
// variance V_n. The residual displacement on the output is
// delta = kappa * n + eps, eps circular complex Gaussian of variance V_eps,
// independent of n. A heralding filter w(m) in [0, 1] decides acceptance.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cvtrade {

using Complex = std::complex<double>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class SurrogateParams {
 public:
  /// Throws std::invalid_argument unless v_n >= 0, v_eps >= 0 and kappa is
  /// finite. Only kappa^2 enters any formula, so the sign of kappa is inert.
  SurrogateParams(double v_n, double v_eps, double kappa)
      : v_n_(v_n), v_eps_(v_eps), kappa_(kappa) {
    if (!std::isfinite(v_n) || v_n < 0.0)
      throw std::invalid_argument("V_n must be a finite value >= 0");
    if (!std::isfinite(v_eps) || v_eps < 0.0)
      throw std::invalid_argument("V_eps must be a finite value >= 0");
    if (!std::isfinite(kappa)) throw std::invalid_argument("kappa must be finite");
  }

  /// (V_n, V_eps, kappa) = (0.5, 0.1, 0.6).
  static SurrogateParams reference() { return {0.5, 0.1, 0.6}; }

  double v_n() const { return v_n_; }
  double v_eps() const { return v_eps_; }
  double kappa() const { return kappa_; }
  double kappa_sq() const { return kappa_ * kappa_; }

  /// Coefficient of |n|^2 in the exponent of the conditional overlap.
  double overlap_penalty() const { return kappa_sq() / (1.0 + v_eps_); }

  bool operator==(const SurrogateParams&) const = default;

 private:
  double v_n_;
  double v_eps_;
  double kappa_;
};

/// Heralding rule on the Bell record: either the deterministic control that
/// accepts everything, or the bounded noiseless-linear-amplification filter
///   w(m) = Theta(m_c - |m|) * exp(theta * (|m|^2 - m_c^2)),  theta = 1 - 1/g^2.
class FilterSpec {
 public:
  enum class Kind { kAcceptAll, kMbNla };

  static FilterSpec accept_all() { return FilterSpec(Kind::kAcceptAll, 1.0, 0.0, 0.0); }

  /// Throws std::invalid_argument unless gain > 1 and cutoff > 0.
  static FilterSpec mbnla(double gain, double cutoff) {
    if (!std::isfinite(gain) || gain <= 1.0)
      throw std::invalid_argument("MB-NLA gain g must be > 1");
    if (!std::isfinite(cutoff) || cutoff <= 0.0)
      throw std::invalid_argument("MB-NLA cut-off m_c must be > 0");
    return FilterSpec(Kind::kMbNla, gain, cutoff, 1.0 - 1.0 / (gain * gain));
  }

  /// Member of the weak-filter family parameterized directly by the exponent
  /// coefficient theta in [0, 1). theta = 0 is the bare hard disk |m| <= m_c
  /// (g = 1), which mbnla() rejects; the deformation sweep needs it as its
  /// baseline.
  static FilterSpec deformation(double theta, double cutoff) {
    if (!std::isfinite(theta) || theta < 0.0 || theta >= 1.0)
      throw std::invalid_argument("deformation strength theta must lie in [0, 1)");
    if (!std::isfinite(cutoff) || cutoff <= 0.0)
      throw std::invalid_argument("MB-NLA cut-off m_c must be > 0");
    return FilterSpec(Kind::kMbNla, 1.0 / std::sqrt(1.0 - theta), cutoff, theta);
  }

  Kind kind() const { return kind_; }
  bool is_accept_all() const { return kind_ == Kind::kAcceptAll; }
  double gain() const { return gain_; }
  double cutoff() const { return cutoff_; }
  double theta() const { return theta_; }

  bool operator==(const FilterSpec&) const = default;

 private:
  FilterSpec(Kind kind, double gain, double cutoff, double theta)
      : kind_(kind), gain_(gain), cutoff_(cutoff), theta_(theta) {}

  Kind kind_;
  double gain_;
  double cutoff_;
  double theta_;
};

/// Gaussian prior over coherent amplitudes, p(alpha) = exp(-|alpha|^2/s^2)/(pi s^2).
class PriorSpec {
 public:
  explicit PriorSpec(double sigma) : sigma_(sigma) {
    if (!std::isfinite(sigma) || sigma <= 0.0)
      throw std::invalid_argument("prior width sigma must be > 0");
  }
  double sigma() const { return sigma_; }

  /// Density against d^2 alpha.
  double density(double r) const {
    const double s2 = sigma_ * sigma_;
    return std::exp(-r * r / s2) / (std::numbers::pi * s2);
  }
  /// Density of r = |alpha| against dr.
  double radial_density(double r) const {
    const double s2 = sigma_ * sigma_;
    return 2.0 * r / s2 * std::exp(-r * r / s2);
  }

  bool operator==(const PriorSpec&) const = default;

 private:
  double sigma_;
};

/// Ideal unity-gain teleporter modeled as a random displacement with
/// Gaussian kernel of variance nu (nu = exp(-2 r) for squeezing r).
class AdditiveNoiseBaseline {
 public:
  explicit AdditiveNoiseBaseline(double nu) : nu_(nu) {
    if (!std::isfinite(nu) || nu < 0.0) throw std::invalid_argument("added noise nu must be >= 0");
  }
  static AdditiveNoiseBaseline from_squeezing(double r) {
    if (!std::isfinite(r) || r < 0.0) throw std::invalid_argument("squeezing r must be >= 0");
    return AdditiveNoiseBaseline(std::exp(-2.0 * r));
  }
  double nu() const { return nu_; }

 private:
  double nu_;
};

/// log w(m) as a function of |m|^2; -inf outside the cut-off.
inline double log_filter_weight_sq(double m_abs_sq, const FilterSpec& filter) {
  if (filter.is_accept_all()) return 0.0;
  const double mc2 = filter.cutoff() * filter.cutoff();
  if (m_abs_sq > mc2) return kNegInf;
  return filter.theta() * (m_abs_sq - mc2);
}

inline double filter_weight(Complex m, const FilterSpec& filter) {
  const double lw = log_filter_weight_sq(std::norm(m), filter);
  return lw == kNegInf ? 0.0 : std::exp(lw);
}

/// Overlap <alpha|rho(alpha|n)|alpha> of a run with record noise n, averaged
/// over the independent residual eps.
inline double conditional_overlap(Complex n, const SurrogateParams& params) {
  return std::exp(-params.overlap_penalty() * std::norm(n)) / (1.0 + params.v_eps());
}

/// Flat conditional fidelity of the accept-all control, 1/(1 + V_eps + kappa^2 V_n).
inline double deterministic_baseline(const SurrogateParams& params) {
  return 1.0 / (1.0 + params.v_eps() + params.kappa_sq() * params.v_n());
}

inline double additive_noise_fidelity(const AdditiveNoiseBaseline& baseline) {
  return 1.0 / (1.0 + baseline.nu());
}

inline double log_noise_density_sq(double n_abs_sq, double v_n) {
  return -std::log(std::numbers::pi * v_n) - n_abs_sq / v_n;
}

inline double noise_density(Complex n, double v_n) {
  if (!(v_n > 0.0)) throw std::invalid_argument("noise density needs V_n > 0");
  return std::exp(log_noise_density_sq(std::norm(n), v_n));
}

/// Upper bound on the conditional fidelity for |alpha| = r >= m_c; a record
/// inside the cut-off forces |n| >= r - m_c.
inline double tail_fidelity_bound(double r, const SurrogateParams& params, const FilterSpec& filter) {
  if (filter.is_accept_all()) throw std::invalid_argument("tail bound needs a finite cut-off");
  if (!(r >= filter.cutoff())) throw std::invalid_argument("tail bound holds only for r >= m_c");
  const double excess = r - filter.cutoff();
  return std::exp(-params.overlap_penalty() * excess * excess) / (1.0 + params.v_eps());
}

}  // namespace cvtrade
