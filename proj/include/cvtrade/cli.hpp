#pragma once

// `cvtrade` command-line front end. run_cli() is the whole program so tests
// can drive it in-process with captured streams.
//
// Exit codes: 0 success, 1 computation failure, 2 usage or config error,
// 3 check-suite failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cvtrade/checks.hpp"
#include "cvtrade/config.hpp"
#include "cvtrade/ensemble.hpp"
#include "cvtrade/io/csv.hpp"
#include "cvtrade/io/svg.hpp"
#include "cvtrade/oracle.hpp"
#include "cvtrade/profile.hpp"
#include "cvtrade/tradeoff.hpp"

namespace cvtrade {

enum ExitCode : int { kExitOk = 0, kExitCompute = 1, kExitUsage = 2, kExitCheck = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace cli_detail {

struct SharedFlags {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::vector<std::string> overrides;
  bool quiet = false;
};

inline RunConfig resolve(const SharedFlags& f) {
  ConfigMap map = f.config_path.empty() ? ConfigMap{} : load_config_file(f.config_path);
  for (const std::string& s : f.overrides) apply_override(map, s);
  if (f.seed) map["oracle.seed"] = std::to_string(*f.seed);
  if (f.lambda) map["objective.lambda"] = io::format_number(*f.lambda);
  if (!f.out.empty()) map["output.path"] = f.out;
  return build_run_config(map);
}

/// Writes `content` to `path` (or to `out` when path is empty). The file is
/// only created once the content is complete.
inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write output file '" + path + "'");
  f << content;
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read input file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void refuse_overwrite(const std::string& input, const std::string& output) {
  if (output.empty()) return;
  std::error_code ec;
  if (std::filesystem::exists(output, ec) && std::filesystem::equivalent(input, output, ec))
    throw UsageError("refusing to overwrite the input file '" + input + "'");
}

inline std::string describe(const SweepRecord& r) {
  std::ostringstream os;
  os << (r.is_control() ? std::string("control") : "g=" + io::format_number(r.g) + " m_c=" + io::format_number(r.m_c))
     << " F=" << io::format_number(r.merit.F) << " D=" << io::format_number(r.merit.D)
     << " P_succ=" << io::format_number(r.merit.P_succ);
  return os.str();
}

// ---- subcommands ----------------------------------------------------------

inline int cmd_profile(const RunConfig& c, std::ostream& out, std::ostream& err, bool quiet) {
  const Protocol proto{c.params, c.filter};
  const std::vector<double> radii = c.radii.empty() ? default_profile_radii(c.filter) : c.radii;
  const FidelityProfile prof = profile_table(radii, proto, c.quad, c.workers);
  std::ostringstream csv;
  io::write_profile_csv(csv, prof, proto);
  emit(c.out, csv.str(), out);
  if (!prof.all_converged()) {
    err << "profile: some radii did not converge (see flag column)\n";
    return kExitCompute;
  }
  if (!quiet && !c.out.empty()) err << "profile: wrote " << prof.size() << " rows to " << c.out << '\n';
  return kExitOk;
}

inline int cmd_moments(const RunConfig& c, const std::string& csv_path, std::ostream& out, std::ostream& err) {
  const Protocol proto{c.params, c.filter};
  const EnsembleSummary e = evaluate_ensemble(proto, c.prior, c.quad, {.workers = c.workers});
  const io::KeyValues kv{{"F", e.merit.F},
                         {"D", e.merit.D},
                         {"P_succ", e.merit.P_succ},
                         {"S1", e.report.S1},
                         {"S2", e.report.S2},
                         {"I_sel", e.report.I_sel},
                         {"I_alpha_S", e.report.I_alpha_S},
                         {"lambda", c.lambda},
                         {"J_lambda", robust_objective(e.merit, c.lambda)},
                         {"cantelli_guarantee", cantelli_guarantee(c.lambda)},
                         {"delta", c.delta},
                         {"throughput_bound", throughput_bound(e.merit, c.delta)}};
  for (const auto& [k, v] : kv) out << k << " = " << io::format_number(v) << '\n';
  if (!csv_path.empty()) {
    std::ostringstream csv;
    io::write_key_values(csv, kv);
    emit(csv_path, csv.str(), out);
  }
  if (!e.converged) {
    err << "moments: quadrature did not converge\n";
    return kExitCompute;
  }
  return kExitOk;
}

inline int cmd_sweep(const RunConfig& c, std::ostream& out, std::ostream& err, bool quiet) {
  const auto records = sweep(c.g_grid, c.m_c_grid, c.params, c.prior, c.lambda, c.quad,
                             {.include_control = c.include_control, .workers = c.workers});
  std::ostringstream csv;
  io::write_sweep_csv(csv, records);
  emit(c.out, csv.str(), out);
  int bad = 0;
  for (const SweepRecord& r : records)
    if (r.quad_flags != QuadFlag::kConverged) {
      ++bad;
      err << "sweep: " << to_string(r.quad_flags) << " at g=" << r.g << " m_c=" << r.m_c
          << (r.message.empty() ? "" : ": " + r.message) << '\n';
    }
  if (!quiet && !c.out.empty()) err << "sweep: wrote " << records.size() << " rows to " << c.out << '\n';
  return bad ? kExitCompute : kExitOk;
}

inline int cmd_frontier(const RunConfig& c, const std::string& input, std::ostream& out) {
  std::istringstream in(read_file(input));
  std::vector<SweepRecord> records;
  try {
    records = io::read_sweep_csv(in);
  } catch (const io::CsvError& e) {
    throw UsageError(input + ": " + e.what());
  }
  if (records.empty()) throw UsageError(input + ": no data rows");
  std::ostringstream os;
  const auto front = pareto_frontier(records);
  os << "frontier (" << front.size() << " of " << records.size() << " records)\n";
  for (const SweepRecord& r : front) os << "  " << describe(r) << '\n';
  const auto best = constrained_best(records, c.D_max, c.P_min);
  os << "constrained_best (D <= " << io::format_number(c.D_max) << ", P_succ >= " << io::format_number(c.P_min)
     << "): " << (best ? describe(*best) : std::string("infeasible")) << '\n';
  const SweepRecord obj = objective_best(records, c.lambda);
  os << "objective_best (lambda = " << io::format_number(c.lambda) << "): " << describe(obj)
     << " J=" << io::format_number(robust_objective(obj.merit, c.lambda)) << '\n';
  emit(c.out, os.str(), out);
  return kExitOk;
}

inline int cmd_check(const RunConfig& c, std::ostream& out) {
  CheckOptions o;
  o.params = c.params;
  o.prior = c.prior;
  o.quad = c.quad;
  o.oracle = c.oracle;
  o.slope_thetas = geometric_thetas(c.slope_theta_max, c.slope_points);
  o.baseline_offset = c.check_baseline_offset;
  o.with_oracle = c.check_oracle;
  o.with_slope = c.check_slope;
  o.workers = c.workers;
  const auto results = run_checks(o);
  std::ostringstream os;
  for (const CheckResult& r : results) {
    os << (r.passed ? "PASS " : (r.gating ? "FAIL " : "WARN ")) << std::left << std::setw(24) << r.name
       << " measured=" << io::format_number(r.measured) << " threshold=" << io::format_number(r.threshold)
       << " margin=" << io::format_number(r.margin) << (r.gating ? "" : " (soft)")
       << (r.detail.empty() ? "" : "  # " + r.detail) << '\n';
  }
  const bool ok = all_passed(results);
  os << (ok ? "all checks passed\n" : "check suite FAILED\n");
  emit(c.out, os.str(), out);
  return ok ? kExitOk : kExitCheck;
}

inline int cmd_oracle(const RunConfig& c, std::optional<double> radius, std::ostream& out) {
  const Protocol proto{c.params, c.filter};
  std::ostringstream os;
  if (radius) {
    OracleConfig pc = c.oracle;
    pc.workers = c.workers;
    const McPoint p = mc_point(*radius, proto, pc);
    os << "r = " << io::format_number(*radius) << '\n'
       << "p_succ = " << io::format_number(p.p_succ) << " +- " << io::format_number(p.p_err) << '\n'
       << "f_succ = " << io::format_number(p.f_succ) << " +- " << io::format_number(p.f_err) << '\n'
       << "accepted = " << p.accepted << '\n';
    if (p.inconclusive) os << "inconclusive: no accepted samples\n";
    emit(c.out, os.str(), out);
    return p.inconclusive ? kExitCompute : kExitOk;
  }
  OracleConfig ec = c.oracle;
  ec.workers = c.workers;
  const McEnsemble e = mc_ensemble(proto, c.prior, ec);
  os << "F = " << io::format_number(e.merit.F) << " +- " << io::format_number(e.err.F) << '\n'
     << "D = " << io::format_number(e.merit.D) << " +- " << io::format_number(e.err.D) << '\n'
     << "P_succ = " << io::format_number(e.merit.P_succ) << " +- " << io::format_number(e.err.P_succ) << '\n'
     << "inner_noise_floor = " << io::format_number(e.noise_floor) << '\n';
  if (e.degenerate) os << "bootstrap degenerate: zero spread\n";
  emit(c.out, os.str(), out);
  return kExitOk;
}

inline int cmd_plot(const RunConfig& c, const std::string& input, const std::string& mode, std::ostream& out) {
  std::istringstream in(read_file(input));
  std::string svg;
  try {
    if (mode == "profile") {
      svg = io::plot_profile(io::read_profile_csv(in), std::filesystem::path(input).stem().string());
    } else {
      const auto records = io::read_sweep_csv(in);
      svg = mode == "fd_curves" ? io::plot_fd_curves(records) : io::plot_fd_density(records);
    }
  } catch (const io::CsvError& e) {
    throw UsageError(input + ": " + e.what());
  }
  emit(c.out, svg, out);
  return kExitOk;
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"Fidelity / deviation / success-probability trade-off of filtered CV teleportation", "cvtrade"};
  app.require_subcommand(1);
  app.fallthrough();
  SharedFlags flags;
  app.add_option("--config", flags.config_path, "key = value configuration file");
  app.add_option("--out", flags.out, "output path (default: stdout)");
  app.add_option("--seed", flags.seed, "oracle seed (u64)");
  app.add_option("--lambda", flags.lambda, "robust-objective weight lambda > 0");
  app.add_option("--set", flags.overrides, "override a config key: --set params.V_n=0.4")->take_all();
  app.add_flag("--quiet", flags.quiet, "suppress informational messages");

  auto* profile = app.add_subcommand("profile", "single-shot f_succ / P_succ profile as CSV");
  std::string csv_path;
  auto* moments = app.add_subcommand("moments", "ensemble (F, D, P_succ), selectivity and guarantees");
  moments->add_option("--csv", csv_path, "also write a key,value CSV here");
  auto* sweep_cmd = app.add_subcommand("sweep", "(g, m_c) grid sweep as CSV");
  std::string input;
  auto* frontier = app.add_subcommand("frontier", "Pareto frontier and operating points of a sweep CSV");
  frontier->add_option("sweep_csv", input, "sweep CSV")->required();
  std::optional<double> d_max, p_min;
  frontier->add_option("--D-max", d_max, "deviation ceiling");
  frontier->add_option("--P-min", p_min, "success-probability floor");
  auto* check = app.add_subcommand("check", "run the invariant suite");
  auto* oracle = app.add_subcommand("oracle", "Monte Carlo estimates with standard errors");
  std::optional<double> radius;
  oracle->add_option("--r", radius, "estimate a single point at this |alpha| instead of the ensemble");
  auto* plot = app.add_subcommand("plot", "render a profile or sweep CSV as SVG");
  std::string mode = "fd_density";
  plot->add_option("input_csv", input, "profile or sweep CSV")->required();
  plot->add_option("--mode", mode, "profile | fd_curves | fd_density")
      ->check(CLI::IsMember({"profile", "fd_curves", "fd_density"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  RunConfig cfg;
  try {
    if (frontier->parsed()) {
      if (d_max) flags.overrides.push_back("frontier.D_max=" + io::format_number(*d_max));
      if (p_min) flags.overrides.push_back("frontier.P_min=" + io::format_number(*p_min));
    }
    cfg = resolve(flags);
    if (frontier->parsed() || plot->parsed()) refuse_overwrite(input, cfg.out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (profile->parsed()) return cmd_profile(cfg, out, err, flags.quiet);
    if (moments->parsed()) return cmd_moments(cfg, csv_path, out, err);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg, out, err, flags.quiet);
    if (frontier->parsed()) return cmd_frontier(cfg, input, out);
    if (check->parsed()) return cmd_check(cfg, out);
    if (oracle->parsed()) return cmd_oracle(cfg, radius, out);
    if (plot->parsed()) return cmd_plot(cfg, input, mode, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "computation failed: " << e.what() << '\n';
    return kExitCompute;
  }
  return kExitUsage;
}

}  // namespace cvtrade
