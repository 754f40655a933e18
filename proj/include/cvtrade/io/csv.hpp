#pragma once

// Locale-independent CSV for profiles, sweeps and key/value reports.
// Numbers are written with 12 significant digits, trailing zeros kept
// (printf "%#.12g" layout), LF line endings.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "cvtrade/profile.hpp"
#include "cvtrade/tradeoff.hpp"

namespace cvtrade::io {

inline constexpr int kSignificantDigits = 12;
inline constexpr std::string_view kProfileHeader = "r,f_succ,p_succ,log_p_succ,tail_bound,flag";
inline constexpr std::string_view kSweepHeader = "g,m_c,F,D,P_succ,S1,S2,I_sel,I_alpha_S,J_lambda,flag";

class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return std::signbit(v) ? "-0.00000000000" : "0.00000000000";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, kSignificantDigits - 1);
  const std::string_view sci(buf, res.ptr - buf);
  const int exponent = std::atoi(std::string(sci.substr(sci.find('e') + 1)).c_str());
  if (exponent < -4 || exponent >= kSignificantDigits) return std::string(sci);
  const int decimals = kSignificantDigits - 1 - exponent;
  res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
  std::string s(buf, res.ptr);
  if (decimals == 0) s += '.';
  return s;
}

inline double parse_number(std::string_view s, std::size_t line, std::string_view column) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw CsvError(line, "column '" + std::string(column) + "': not a number: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Reads all lines, stripping one trailing CR per line.
inline std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string s;
  while (std::getline(in, s)) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    lines.push_back(std::move(s));
  }
  return lines;
}

// ---- profile --------------------------------------------------------------

inline void write_profile_csv(std::ostream& os, const FidelityProfile& prof, const Protocol& proto) {
  os << kProfileHeader << '\n';
  for (std::size_t i = 0; i < prof.size(); ++i) {
    const double r = prof.radii[i];
    os << format_number(r) << ',' << format_number(prof.f_succ[i]) << ',' << format_number(prof.p_succ[i]) << ','
       << format_number(prof.log_p_succ[i]) << ',';
    if (!proto.filter.is_accept_all() && r >= proto.filter.cutoff()) os << format_number(tail_bound(r, proto));
    os << ',' << (prof.converged[i] ? "ok" : "nonconverged") << '\n';
  }
}

struct ProfileRow {
  double r = 0.0, f_succ = 0.0, p_succ = 0.0, log_p_succ = 0.0;
  std::optional<double> tail_bound;
  std::string flag;
};

inline std::vector<ProfileRow> read_profile_csv(std::istream& in) {
  const auto lines = read_lines(in);
  if (lines.empty() || lines[0] != kProfileHeader)
    throw CsvError(1, "expected header '" + std::string(kProfileHeader) + "'");
  std::vector<ProfileRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t ln = i + 1;
    if (lines[i].empty()) continue;
    const auto f = split_fields(lines[i]);
    if (f.size() != 6) throw CsvError(ln, "expected 6 fields, found " + std::to_string(f.size()));
    ProfileRow row;
    row.r = parse_number(f[0], ln, "r");
    row.f_succ = parse_number(f[1], ln, "f_succ");
    row.p_succ = parse_number(f[2], ln, "p_succ");
    row.log_p_succ = parse_number(f[3], ln, "log_p_succ");
    if (!f[4].empty()) row.tail_bound = parse_number(f[4], ln, "tail_bound");
    row.flag = std::string(f[5]);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- sweep ----------------------------------------------------------------

inline void write_sweep_row(std::ostream& os, const SweepRecord& r) {
  const double v[] = {r.g,          r.m_c,       r.merit.F,     r.merit.D,           r.merit.P_succ,
                      r.report.S1, r.report.S2, r.report.I_sel, r.report.I_alpha_S, r.J_lambda};
  for (double x : v) os << format_number(x) << ',';
  os << to_string(r.quad_flags) << '\n';
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRecord>& records) {
  os << kSweepHeader << '\n';
  for (const SweepRecord& r : records) write_sweep_row(os, r);
}

inline QuadFlag parse_flag(std::string_view s, std::size_t line) {
  if (s == "ok") return QuadFlag::kConverged;
  if (s == "nonconverged") return QuadFlag::kNotConverged;
  if (s == "failed") return QuadFlag::kFailed;
  throw CsvError(line, "column 'flag': unknown value '" + std::string(s) + "'");
}

inline std::vector<SweepRecord> read_sweep_csv(std::istream& in) {
  const auto lines = read_lines(in);
  if (lines.empty() || lines[0] != kSweepHeader)
    throw CsvError(1, "expected header '" + std::string(kSweepHeader) + "'");
  static constexpr std::string_view names[] = {"g",  "m_c", "F",     "D",         "P_succ",
                                               "S1", "S2",  "I_sel", "I_alpha_S", "J_lambda"};
  std::vector<SweepRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t ln = i + 1;
    if (lines[i].empty()) continue;
    const auto f = split_fields(lines[i]);
    if (f.size() != 11) throw CsvError(ln, "expected 11 fields, found " + std::to_string(f.size()));
    double v[10];
    for (int k = 0; k < 10; ++k) v[k] = parse_number(f[k], ln, names[k]);
    SweepRecord r;
    r.g = v[0];
    r.m_c = v[1];
    r.merit = {v[2], v[3], v[4]};
    r.report = {v[3], v[5], v[6], v[7], v[8]};
    r.J_lambda = v[9];
    r.quad_flags = parse_flag(f[10], ln);
    out.push_back(r);
  }
  return out;
}

// ---- key/value ------------------------------------------------------------

using KeyValues = std::vector<std::pair<std::string, double>>;

inline void write_key_values(std::ostream& os, const KeyValues& kv) {
  os << "key,value\n";
  for (const auto& [k, v] : kv) os << k << ',' << format_number(v) << '\n';
}

}  // namespace cvtrade::io
