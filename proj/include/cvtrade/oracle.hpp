#pragma once

// Nested Monte Carlo oracle, independent of the quadrature path. The inner
// level samples the Bell-record noise at fixed input and estimates
// P_succ(alpha) and f_succ(alpha); the outer level samples inputs from the
// prior and forms the success-weighted moments with bootstrap errors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvtrade/ensemble.hpp"
#include "cvtrade/model.hpp"
#include "cvtrade/parallel.hpp"
#include "cvtrade/profile.hpp"
#include "cvtrade/rng.hpp"

namespace cvtrade {

enum class Estimator { kRaoBlackwell, kFullBrute };

struct OracleConfig {
  std::uint64_t seed = 0x5eed'c0de'2024'0001ull;
  int n_outer = 2000;
  int n_inner = 10000;
  Estimator estimator = Estimator::kRaoBlackwell;
  int bootstrap = 200;
  bool jackknife = false;  // delete-a-group correction of the inner ratio bias
  int jackknife_groups = 10;
  unsigned workers = 0;

  void validate() const {
    if (n_outer < 100) throw std::invalid_argument("oracle.n_outer must be >= 100");
    if (n_inner < 1000) throw std::invalid_argument("oracle.n_inner must be >= 1000");
    if (bootstrap < 2) throw std::invalid_argument("oracle.bootstrap must be >= 2");
    if (jackknife && (jackknife_groups < 2 || jackknife_groups > n_inner))
      throw std::invalid_argument("oracle.jackknife_groups must lie in [2, n_inner]");
  }
};

struct McPoint {
  double p_succ = 0.0;
  double p_err = 0.0;
  double f_succ = std::numeric_limits<double>::quiet_NaN();
  double f_err = std::numeric_limits<double>::quiet_NaN();
  long long accepted = 0;  // Bernoulli acceptances (FullBrute) or nonzero weights (RaoBlackwell)
  bool inconclusive = false;
};

namespace detail {

/// Running sums for the ratio  mean(y) / mean(w)  and its delta-method error.
struct RatioSums {
  double sw = 0.0, sy = 0.0, sww = 0.0, syy = 0.0, swy = 0.0;
  long long n = 0;

  void add(double w, double y) {
    sw += w;
    sy += y;
    sww += w * w;
    syy += y * y;
    swy += w * y;
    ++n;
  }
  void merge(const RatioSums& o) {
    sw += o.sw;
    sy += o.sy;
    sww += o.sww;
    syy += o.syy;
    swy += o.swy;
    n += o.n;
  }
  double ratio() const { return sy / sw; }
  /// Standard error of mean(w).
  double mean_w_err() const {
    const double m = sw / n;
    return std::sqrt(std::max(0.0, (sww / n - m * m) / (n - 1)));
  }
  /// Delta-method standard error of the ratio.
  double ratio_err() const {
    const double mw = sw / n, my = sy / n, r = sy / sw;
    const double vw = sww / n - mw * mw, vy = syy / n - my * my, cwy = swy / n - mw * my;
    return std::sqrt(std::max(0.0, (vy - 2.0 * r * cwy + r * r * vw) / (n - 1))) / mw;
  }
};

using WeightFn = std::function<double(Complex)>;

struct InnerResult {
  RatioSums total;
  std::vector<RatioSums> groups;  // only with jackknife
  long long accepted = 0;
};

/// Inner loop at fixed alpha on stream `outer`. RaoBlackwell uses (w, w k(n));
/// FullBrute uses (1[u < w], 1[u < w] exp(-|kappa n + eps|^2)), with the
/// 1/(1+V_eps) folded in by the caller only for RaoBlackwell.
inline InnerResult run_inner(Complex alpha, const SurrogateParams& params, const WeightFn& weight, int n_inner,
                             Estimator est, std::uint64_t seed, std::uint32_t outer, int groups) {
  CounterStream noise(seed, outer, StreamTag::kNoise);
  CounterStream accept(seed, outer, StreamTag::kAccept);
  CounterStream residual(seed, outer, StreamTag::kResidual);
  const double penalty = params.overlap_penalty();
  InnerResult out;
  if (groups > 0) out.groups.resize(groups);
  for (int i = 0; i < n_inner; ++i) {
    const auto [nx, ny] = noise.complex_normal(params.v_n());
    const Complex n{nx, ny};
    const double w = weight(alpha + n);
    double wi = 0.0, yi = 0.0;
    if (est == Estimator::kRaoBlackwell) {
      wi = w;
      yi = w * std::exp(-penalty * std::norm(n));
      if (w > 0.0) ++out.accepted;
    } else {
      const double u = accept.uniform();
      const auto [ex, ey] = residual.complex_normal(params.v_eps());
      if (u < w) {
        const Complex delta = params.kappa() * n + Complex{ex, ey};
        wi = 1.0;
        yi = std::exp(-std::norm(delta));
        ++out.accepted;
      }
    }
    out.total.add(wi, yi);
    if (groups > 0) out.groups[static_cast<std::size_t>(i) % groups].add(wi, yi);
  }
  return out;
}

/// Delete-a-group jackknife of the ratio: G R - (G-1) mean_g R_(-g).
inline double jackknife_ratio(const InnerResult& in) {
  const double g = static_cast<double>(in.groups.size());
  double mean_loo = 0.0;
  for (const RatioSums& grp : in.groups) {
    RatioSums loo = in.total;
    loo.sw -= grp.sw;
    loo.sy -= grp.sy;
    if (!(loo.sw > 0.0)) return in.total.ratio();
    mean_loo += loo.ratio();
  }
  mean_loo /= g;
  return g * in.total.ratio() - (g - 1.0) * mean_loo;
}

inline double rb_scale(Estimator est, const SurrogateParams& p) {
  return est == Estimator::kRaoBlackwell ? 1.0 / (1.0 + p.v_eps()) : 1.0;
}

inline WeightFn filter_weight_fn(const FilterSpec& filter) {
  return [filter](Complex m) { return filter_weight(m, filter); };
}

}  // namespace detail

/// Point estimate at a complex input; n_outer is not used here.
inline McPoint mc_point(Complex alpha, const Protocol& proto, const OracleConfig& cfg, std::uint32_t stream = 0) {
  if (cfg.n_inner < 1000) throw std::invalid_argument("oracle.n_inner must be >= 1000");
  const auto in = detail::run_inner(alpha, proto.params, detail::filter_weight_fn(proto.filter), cfg.n_inner,
                                    cfg.estimator, cfg.seed, stream, cfg.jackknife ? cfg.jackknife_groups : 0);
  McPoint out;
  out.accepted = in.accepted;
  out.p_succ = in.total.sw / in.total.n;
  out.p_err = in.total.mean_w_err();
  if (!(in.total.sw > 0.0)) {
    out.inconclusive = true;
    return out;
  }
  const double scale = detail::rb_scale(cfg.estimator, proto.params);
  out.f_succ = scale * (cfg.jackknife ? detail::jackknife_ratio(in) : in.total.ratio());
  out.f_err = scale * in.total.ratio_err();
  return out;
}

inline McPoint mc_point(double r, const Protocol& proto, const OracleConfig& cfg, std::uint32_t stream = 0) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("input radius must be finite and >= 0");
  return mc_point(Complex{r, 0.0}, proto, cfg, stream);
}

struct McEnsemble {
  MeritTriple merit;
  MeritTriple err;           // bootstrap standard errors
  double noise_floor = 0.0;  // sqrt(E_eff[Var f_hat_i]): inner noise contribution to D_hat
  long long outer_used = 0;  // outer samples with nonzero estimated P_succ
  bool degenerate = false;   // bootstrap spread identically zero
};

namespace detail {

struct OuterSample {
  double p = 0.0;      // P_hat_i
  double pf = 0.0;     // P_hat_i f_hat_i
  double pf2 = 0.0;    // P_hat_i f_hat_i^2
  double pvar = 0.0;   // P_hat_i Var(f_hat_i)
};

inline MeritTriple moments_of(const std::vector<OuterSample>& s, const std::vector<std::uint32_t>* idx) {
  double sp = 0.0, spf = 0.0, spf2 = 0.0;
  const std::size_t n = idx ? idx->size() : s.size();
  for (std::size_t k = 0; k < n; ++k) {
    const OuterSample& o = s[idx ? (*idx)[k] : k];
    sp += o.p;
    spf += o.pf;
    spf2 += o.pf2;
  }
  if (!(sp > 0.0)) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), 0.0};
  const double F = spf / sp;
  return {F, std::sqrt(std::max(0.0, spf2 / sp - F * F)), sp / static_cast<double>(n)};
}

inline Complex draw_prior(const PriorSpec& prior, std::uint64_t seed, std::uint32_t outer) {
  CounterStream s(seed, outer, StreamTag::kPrior);
  const auto [x, y] = s.complex_normal(prior.sigma() * prior.sigma());
  return {x, y};
}

}  // namespace detail

inline McEnsemble mc_ensemble(const Protocol& proto, const PriorSpec& prior, const OracleConfig& cfg) {
  cfg.validate();
  const auto weight = detail::filter_weight_fn(proto.filter);
  const double scale = detail::rb_scale(cfg.estimator, proto.params);
  std::vector<detail::OuterSample> samples(cfg.n_outer);
  parallel_for(
      samples.size(),
      [&](std::size_t i) {
        const auto outer = static_cast<std::uint32_t>(i);
        const Complex alpha = detail::draw_prior(prior, cfg.seed, outer);
        const auto in = detail::run_inner(alpha, proto.params, weight, cfg.n_inner, cfg.estimator, cfg.seed, outer,
                                          cfg.jackknife ? cfg.jackknife_groups : 0);
        detail::OuterSample& o = samples[i];
        o.p = in.total.sw / in.total.n;
        if (o.p > 0.0) {
          const double f = scale * (cfg.jackknife ? detail::jackknife_ratio(in) : in.total.ratio());
          const double fe = scale * in.total.ratio_err();
          o.pf = o.p * f;
          o.pf2 = o.p * f * f;
          o.pvar = o.p * fe * fe;
        }
      },
      cfg.workers);

  McEnsemble out;
  out.merit = detail::moments_of(samples, nullptr);
  double sp = 0.0, spvar = 0.0;
  for (const auto& o : samples) {
    sp += o.p;
    spvar += o.pvar;
    if (o.p > 0.0) ++out.outer_used;
  }
  out.noise_floor = sp > 0.0 ? std::sqrt(spvar / sp) : 0.0;

  std::vector<MeritTriple> reps(cfg.bootstrap);
  parallel_for(
      reps.size(),
      [&](std::size_t b) {
        CounterStream s(cfg.seed, static_cast<std::uint32_t>(b), StreamTag::kBootstrap);
        std::vector<std::uint32_t> idx(samples.size());
        for (auto& k : idx)
          k = static_cast<std::uint32_t>(std::min<double>(s.uniform() * samples.size(), samples.size() - 1));
        reps[b] = detail::moments_of(samples, &idx);
      },
      cfg.workers);
  auto spread = [&](auto field) {
    double m = 0.0, m2 = 0.0;
    int n = 0;
    for (const MeritTriple& t : reps) {
      const double v = t.*field;
      if (!std::isfinite(v)) continue;
      m += v;
      m2 += v * v;
      ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    m /= n;
    return std::sqrt(std::max(0.0, (m2 / n - m * m) * n / (n - 1)));
  };
  out.err = {spread(&MeritTriple::F), spread(&MeritTriple::D), spread(&MeritTriple::P_succ)};
  out.degenerate = !(out.err.F > 0.0) && !(out.err.D > 0.0) && !(out.err.P_succ > 0.0);
  return out;
}

struct McMutualInformation {
  double value = 0.0;   // plug-in h2(P) - sum_k q_k h2(p_k), nats
  int bins_used = 0;    // after merging empty bins
  double p_succ = 0.0;
};

/// Success-flag mutual information from equal-prior-probability bins in
/// |alpha|. Within-bin variation of P_succ(alpha) is lost, so the plug-in
/// value is biased low by Jensen.
inline McMutualInformation mc_success_flag_mi(const std::function<double(Complex)>& weight,
                                              const SurrogateParams& params, const PriorSpec& prior,
                                              const OracleConfig& cfg, int n_bins) {
  cfg.validate();
  if (n_bins < 10) throw std::invalid_argument("mc_success_flag_mi: n_bins must be >= 10");
  std::vector<double> radius(cfg.n_outer), rate(cfg.n_outer);
  parallel_for(
      radius.size(),
      [&](std::size_t i) {
        const auto outer = static_cast<std::uint32_t>(i);
        const Complex alpha = detail::draw_prior(prior, cfg.seed, outer);
        const auto in = detail::run_inner(alpha, params, weight, cfg.n_inner, cfg.estimator, cfg.seed, outer, 0);
        radius[i] = std::abs(alpha);
        rate[i] = in.total.sw / in.total.n;
      },
      cfg.workers);

  // Prior quantiles of |alpha|: |alpha|^2 ~ Exp(mean sigma^2).
  const double s2 = prior.sigma() * prior.sigma();
  std::vector<double> sum(n_bins, 0.0);
  std::vector<long long> count(n_bins, 0);
  for (std::size_t i = 0; i < radius.size(); ++i) {
    const double cdf = -std::expm1(-radius[i] * radius[i] / s2);
    const int k = std::min(n_bins - 1, static_cast<int>(cdf * n_bins));
    sum[k] += rate[i];
    ++count[k];
  }
  // Merge each empty bin into the next nonempty one (the last into its predecessor).
  std::vector<double> msum;
  std::vector<long long> mcount;
  double carry_s = 0.0;
  long long carry_c = 0;
  for (int k = 0; k < n_bins; ++k) {
    carry_s += sum[k];
    carry_c += count[k];
    if (carry_c > 0) {
      msum.push_back(carry_s);
      mcount.push_back(carry_c);
      carry_s = 0.0;
      carry_c = 0;
    }
  }
  McMutualInformation out;
  const double n = static_cast<double>(radius.size());
  double total = 0.0, cond = 0.0;
  for (std::size_t k = 0; k < msum.size(); ++k) {
    total += msum[k];
    cond += (mcount[k] / n) * binary_entropy(std::clamp(msum[k] / mcount[k], 0.0, 1.0));
  }
  out.p_succ = total / n;
  out.value = binary_entropy(std::clamp(out.p_succ, 0.0, 1.0)) - cond;
  out.bins_used = static_cast<int>(msum.size());
  return out;
}

inline McMutualInformation mc_success_flag_mi(const Protocol& proto, const PriorSpec& prior,
                                              const OracleConfig& cfg, int n_bins) {
  return mc_success_flag_mi(detail::filter_weight_fn(proto.filter), proto.params, prior, cfg, n_bins);
}

struct HeraldedSample {
  std::vector<Complex> alphas;  // inputs of the successful trials, in trial order
  long long trials = 0;
};

/// Physical heralding: alpha ~ prior, n ~ noise, accept with probability
/// w(alpha + n). Accepted inputs are distributed as the effective prior.
/// Stops after n_accept acceptances or max_trials trials.
inline HeraldedSample sample_effective_prior(const Protocol& proto, const PriorSpec& prior, std::uint64_t seed,
                                             std::size_t n_accept, long long max_trials = 100'000'000) {
  if (n_accept == 0) throw std::invalid_argument("sample_effective_prior: n_accept must be > 0");
  CounterStream alpha_s(seed, 0, StreamTag::kHerald);
  CounterStream noise_s(seed, 1, StreamTag::kHerald);
  CounterStream accept_s(seed, 2, StreamTag::kHerald);
  const double s2 = prior.sigma() * prior.sigma();
  HeraldedSample out;
  out.alphas.reserve(n_accept);
  while (out.alphas.size() < n_accept && out.trials < max_trials) {
    const auto [ax, ay] = alpha_s.complex_normal(s2);
    const auto [nx, ny] = noise_s.complex_normal(proto.params.v_n());
    const Complex alpha{ax, ay};
    const double u = accept_s.uniform();
    ++out.trials;
    if (u < filter_weight(alpha + Complex{nx, ny}, proto.filter)) out.alphas.push_back(alpha);
  }
  return out;
}

}  // namespace cvtrade
