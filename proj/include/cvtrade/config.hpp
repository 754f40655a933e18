#pragma once

// Run configuration: a flat `key = value` document with dotted keys
// (`params.V_n = 0.5`), '#' comments, and command-line overrides that win.
// Every key is validated before any computation; errors name the key.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cvtrade/ensemble.hpp"
#include "cvtrade/model.hpp"
#include "cvtrade/oracle.hpp"
#include "cvtrade/quadrature.hpp"

namespace cvtrade {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  SurrogateParams params = SurrogateParams::reference();
  PriorSpec prior{2.0};
  FilterSpec filter = FilterSpec::mbnla(1.2, 3.0);
  std::vector<double> g_grid{1.2, 1.4, 1.6};
  std::vector<double> m_c_grid{1.8, 2.2, 2.6, 3.0};
  bool include_control = false;
  std::vector<double> radii;  // empty: default profile grid
  QuadConfig quad;
  OracleConfig oracle;
  double lambda = 3.0;
  double delta = 0.05;
  double D_max = std::numeric_limits<double>::infinity();
  double P_min = 0.0;
  double slope_theta_max = 0.04;
  int slope_points = 4;
  double check_baseline_offset = 0.0;
  bool check_oracle = true;
  bool check_slope = true;
  unsigned workers = 0;
  std::string out;
};

using ConfigMap = std::map<std::string, std::string, std::less<>>;

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& key, const std::string& v) {
  if (v == "inf") return std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int x{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list of numbers");
  return out;
}

}  // namespace config_detail

/// Parses the document text; `origin` prefixes line-numbered errors.
inline ConfigMap parse_config_text(std::string_view text, const std::string& origin = "config") {
  ConfigMap map;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string line = config_detail::trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = config_detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = config_detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    if (map.count(key)) throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + key + ": duplicate key");
    map[key] = value;
  }
  return map;
}

inline ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

/// Applies one `key=value` override.
inline void apply_override(ConfigMap& map, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "': expected key=value");
  const std::string key = config_detail::trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError("override '" + std::string(assignment) + "': empty key");
  map[key] = config_detail::trim(assignment.substr(eq + 1));
}

inline const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys{
      "params.V_n",          "params.V_eps",        "params.kappa",       "prior.sigma",
      "filter.kind",         "filter.g",            "filter.m_c",         "grid.g",
      "grid.m_c",            "grid.include_control", "profile.radii",     "profile.r_max",
      "profile.points",      "quad.radial_order",   "quad.angular_order", "quad.panels",
      "quad.rel_tol",        "quad.abs_tol",        "quad.prior_trunc_eps", "quad.max_panels",
      "oracle.seed",         "oracle.n_outer",      "oracle.n_inner",     "oracle.estimator",
      "oracle.bootstrap",    "oracle.jackknife",    "objective.lambda",   "objective.delta",
      "frontier.D_max",      "frontier.P_min",      "slope.theta_max",    "slope.points",
      "check.baseline_offset", "check.oracle",      "check.slope",        "run.workers",
      "output.path"};
  return keys;
}

/// Builds and validates a RunConfig from defaults plus `map`.
inline RunConfig build_run_config(const ConfigMap& map) {
  using namespace config_detail;
  const auto& known = known_config_keys();
  for (const auto& [k, v] : map)
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError(k + ": unknown key");

  auto get = [&](std::string_view key) -> std::optional<std::string> {
    const auto it = map.find(key);
    if (it == map.end()) return std::nullopt;
    return it->second;
  };
  auto num = [&](const char* key, double fallback) {
    const auto v = get(key);
    return v ? to_double(key, *v) : fallback;
  };
  // Wraps a constructor so its message is tagged with the offending key path.
  auto guarded = [](const std::string& key, auto&& make) {
    try {
      return make();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key + ": " + e.what());
    }
  };

  RunConfig c;
  for (const char* key : {"params.V_n", "params.V_eps"})
    if (const double v = num(key, 0.0); !(v >= 0.0) || !std::isfinite(v))
      throw ConfigError(std::string(key) + ": must be finite and >= 0");
  c.params = guarded("params", [&] {
    return SurrogateParams(num("params.V_n", 0.5), num("params.V_eps", 0.1), num("params.kappa", 0.6));
  });
  c.prior = guarded("prior.sigma", [&] { return PriorSpec(num("prior.sigma", 2.0)); });

  const std::string kind = get("filter.kind").value_or("mbnla");
  if (kind == "accept_all") {
    c.filter = FilterSpec::accept_all();
  } else if (kind == "mbnla") {
    if (const double g = num("filter.g", 1.2); !(g > 1.0) || !std::isfinite(g))
      throw ConfigError("filter.g: gain must be finite and > 1");
    if (const double m = num("filter.m_c", 3.0); !(m > 0.0) || !std::isfinite(m))
      throw ConfigError("filter.m_c: cut-off must be finite and > 0");
    c.filter = guarded("filter", [&] { return FilterSpec::mbnla(num("filter.g", 1.2), num("filter.m_c", 3.0)); });
  } else {
    throw ConfigError("filter.kind: expected accept_all or mbnla, got '" + kind + "'");
  }

  if (auto v = get("grid.g")) c.g_grid = to_list("grid.g", *v);
  if (auto v = get("grid.m_c")) c.m_c_grid = to_list("grid.m_c", *v);
  for (double g : c.g_grid)
    if (!(g > 1.0) || !std::isfinite(g)) throw ConfigError("grid.g: every gain must be finite and > 1");
  for (double m : c.m_c_grid)
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("grid.m_c: every cut-off must be finite and > 0");
  if (auto v = get("grid.include_control")) c.include_control = to_bool("grid.include_control", *v);

  if (auto v = get("profile.radii")) {
    c.radii = to_list("profile.radii", *v);
  } else if (get("profile.r_max") || get("profile.points")) {
    const double r_max = num("profile.r_max", c.filter.is_accept_all() ? 6.0 : c.filter.cutoff() + 3.0);
    const auto pts = get("profile.points") ? to_int<int>("profile.points", *get("profile.points")) : 121;
    if (!(r_max > 0.0)) throw ConfigError("profile.r_max: must be > 0");
    if (pts < 2) throw ConfigError("profile.points: must be >= 2");
    for (int i = 0; i < pts; ++i) c.radii.push_back(r_max * i / (pts - 1));
  }

  if (auto v = get("quad.radial_order")) c.quad.radial_order = to_int<int>("quad.radial_order", *v);
  if (auto v = get("quad.angular_order")) c.quad.angular_order = to_int<int>("quad.angular_order", *v);
  if (auto v = get("quad.panels")) c.quad.panels = to_int<int>("quad.panels", *v);
  if (auto v = get("quad.max_panels")) c.quad.max_panels = to_int<int>("quad.max_panels", *v);
  c.quad.rel_tol = num("quad.rel_tol", c.quad.rel_tol);
  c.quad.abs_tol = num("quad.abs_tol", c.quad.abs_tol);
  c.quad.prior_trunc_eps = num("quad.prior_trunc_eps", c.quad.prior_trunc_eps);
  guarded("quad", [&] {
    c.quad.validate();
    return 0;
  });

  if (auto v = get("oracle.seed")) c.oracle.seed = to_int<std::uint64_t>("oracle.seed", *v);
  if (auto v = get("oracle.n_outer")) c.oracle.n_outer = to_int<int>("oracle.n_outer", *v);
  if (auto v = get("oracle.n_inner")) c.oracle.n_inner = to_int<int>("oracle.n_inner", *v);
  if (auto v = get("oracle.bootstrap")) c.oracle.bootstrap = to_int<int>("oracle.bootstrap", *v);
  if (auto v = get("oracle.jackknife")) c.oracle.jackknife = to_bool("oracle.jackknife", *v);
  if (auto v = get("oracle.estimator")) {
    if (*v == "rao_blackwell") c.oracle.estimator = Estimator::kRaoBlackwell;
    else if (*v == "full_brute") c.oracle.estimator = Estimator::kFullBrute;
    else throw ConfigError("oracle.estimator: expected rao_blackwell or full_brute, got '" + *v + "'");
  }
  guarded("oracle", [&] {
    c.oracle.validate();
    return 0;
  });

  c.lambda = num("objective.lambda", c.lambda);
  c.delta = num("objective.delta", c.delta);
  if (!(c.lambda > 0.0) || !std::isfinite(c.lambda)) throw ConfigError("objective.lambda: must be finite and > 0");
  if (!(c.delta > 0.0) || !std::isfinite(c.delta)) throw ConfigError("objective.delta: must be finite and > 0");
  c.D_max = num("frontier.D_max", c.D_max);
  c.P_min = num("frontier.P_min", c.P_min);
  if (!(c.D_max >= 0.0)) throw ConfigError("frontier.D_max: must be >= 0");
  if (!(c.P_min >= 0.0 && c.P_min <= 1.0)) throw ConfigError("frontier.P_min: must lie in [0, 1]");

  c.slope_theta_max = num("slope.theta_max", c.slope_theta_max);
  if (auto v = get("slope.points")) c.slope_points = to_int<int>("slope.points", *v);
  if (!(c.slope_theta_max > 0.0 && c.slope_theta_max < 1.0)) throw ConfigError("slope.theta_max: must lie in (0, 1)");
  if (c.slope_points < 4) throw ConfigError("slope.points: must be >= 4");

  c.check_baseline_offset = num("check.baseline_offset", 0.0);
  if (auto v = get("check.oracle")) c.check_oracle = to_bool("check.oracle", *v);
  if (auto v = get("check.slope")) c.check_slope = to_bool("check.slope", *v);
  if (auto v = get("run.workers")) c.workers = to_int<unsigned>("run.workers", *v);
  c.out = get("output.path").value_or("");
  return c;
}

}  // namespace cvtrade
