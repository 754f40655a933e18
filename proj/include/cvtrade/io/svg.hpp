#pragma once

// Self-contained SVG 1.1 line and scatter charts. Coordinates are printed
// with fixed precision via to_chars, so identical input gives identical bytes.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvtrade/io/csv.hpp"

namespace cvtrade::io {

namespace svg_detail {

inline std::string num(double v, int decimals = 2) {
  char buf[64];
  if (std::abs(v) < 0.5 * std::pow(10.0, -decimals)) v = 0.0;  // no "-0.00"
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
  return std::string(buf, res.ptr);
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Tick positions at 1, 2 or 5 times a power of ten, about `target` of them.
inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> t;
  for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + 1e-9 * step; v += step) t.push_back(v);
  return t;
}

inline int tick_decimals(const std::vector<double>& ticks) {
  if (ticks.size() < 2) return 2;
  const double step = ticks[1] - ticks[0];
  return std::clamp(static_cast<int>(std::ceil(-std::log10(step) - 1e-9)), 0, 6);
}

struct Rgb {
  double r, g, b;
};

/// Five-stop perceptual ramp (dark purple, blue, teal, green, yellow).
inline std::string ramp_color(double t) {
  static constexpr std::array<Rgb, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98},
                                             {253, 231, 37}}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * (stops.size() - 1);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double u = t - static_cast<double>(i);
  char buf[8];
  const int r = static_cast<int>(std::lround(stops[i].r + u * (stops[i + 1].r - stops[i].r)));
  const int g = static_cast<int>(std::lround(stops[i].g + u * (stops[i + 1].g - stops[i].g)));
  const int b = static_cast<int>(std::lround(stops[i].b + u * (stops[i + 1].b - stops[i].b)));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

inline const char* series_color(std::size_t i) {
  static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return palette[i % std::size(palette)];
}

}  // namespace svg_detail

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::vector<double> color_value;  // scatter only: values mapped through the ramp
};

struct ChartSpec {
  std::string title, x_label, y_label;
  bool scatter = false;
  std::string color_label;  // scatter colorbar caption
  int width = 720, height = 480;
};

inline std::string render_chart(const ChartSpec& spec, const std::vector<Series>& series) {
  using namespace svg_detail;
  constexpr double inf = std::numeric_limits<double>::infinity();
  double x0 = inf, x1 = -inf, y0 = inf, y1 = -inf, c0 = inf, c1 = -inf;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
    for (double c : s.color_value)
      if (std::isfinite(c)) {
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
      }
  }
  if (!(x0 <= x1)) throw std::invalid_argument("render_chart: no finite data");
  auto widen = [](double& lo, double& hi) {
    const double pad = hi > lo ? 0.05 * (hi - lo) : std::max(1e-3, 0.05 * std::abs(lo));
    lo -= pad;
    hi += pad;
  };
  widen(x0, x1);
  widen(y0, y1);
  if (!(c0 <= c1)) c0 = c1 = 0.0;

  const double left = 80, right = spec.scatter ? 130 : 30, top = 40, bottom = 60;
  const double pw = spec.width - left - right, ph = spec.height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << spec.width << "\" height=\""
    << spec.height << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << spec.width << "\" height=\"" << spec.height << "\" fill=\"white\"/>\n"
    << "<text x=\"" << num(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(spec.title) << "</text>\n";

  const auto xt = nice_ticks(x0, x1), yt = nice_ticks(y0, y1);
  const int xd = tick_decimals(xt), yd = tick_decimals(yt);
  o << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (double t : xt)
    o << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(top) << "\" x2=\"" << num(px(t)) << "\" y2=\""
      << num(top + ph) << "\"/>\n";
  for (double t : yt)
    o << "<line x1=\"" << num(left) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(left + pw) << "\" y2=\""
      << num(py(t)) << "\"/>\n";
  o << "</g>\n<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\""
    << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : xt)
    o << "<text x=\"" << num(px(t)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
      << num(t, xd) << "</text>\n";
  for (double t : yt)
    o << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">" << num(t, yd)
      << "</text>\n";
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(spec.height - 15.0)
    << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n"
    << "<text x=\"20\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
    << num(top + ph / 2) << ")\">" << escape(spec.y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    if (spec.scatter) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        const double c = i < s.color_value.size() ? s.color_value[i] : c0;
        const double t = c1 > c0 ? (c - c0) / (c1 - c0) : 0.5;
        o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"5\" fill=\""
          << ramp_color(t) << "\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
      }
    } else {
      o << "<polyline fill=\"none\" stroke=\"" << series_color(k) << "\" stroke-width=\"1.8\" points=\"";
      bool first = true;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        o << (first ? "" : " ") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
        first = false;
      }
      o << "\"/>\n";
    }
  }

  if (spec.scatter) {
    // Colorbar with its numeric range.
    const double bx = left + pw + 30, bw = 16;
    o << "<defs><linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n";
    for (int i = 0; i <= 4; ++i)
      o << "<stop offset=\"" << num(i / 4.0) << "\" stop-color=\"" << ramp_color(i / 4.0) << "\"/>\n";
    o << "</linearGradient></defs>\n"
      << "<rect x=\"" << num(bx) << "\" y=\"" << num(top) << "\" width=\"" << num(bw) << "\" height=\"" << num(ph)
      << "\" fill=\"url(#ramp)\" stroke=\"black\"/>\n"
      << "<text x=\"" << num(bx + bw + 4) << "\" y=\"" << num(top + 10) << "\">" << num(c1, 3) << "</text>\n"
      << "<text x=\"" << num(bx + bw + 4) << "\" y=\"" << num(top + ph) << "\">" << num(c0, 3) << "</text>\n"
      << "<text x=\"" << num(bx) << "\" y=\"" << num(top - 8) << "\">" << escape(spec.color_label) << "</text>\n";
  } else {
    double ly = top + 16;
    for (std::size_t k = 0; k < series.size(); ++k, ly += 18) {
      o << "<line x1=\"" << num(left + pw - 150) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(left + pw - 125)
        << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << series_color(k) << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << num(left + pw - 118) << "\" y=\"" << num(ly) << "\">" << escape(series[k].label)
        << "</text>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

// ---- figure modes ---------------------------------------------------------

inline std::string plot_profile(const std::vector<ProfileRow>& rows, const std::string& label) {
  if (rows.empty()) throw std::invalid_argument("plot profile: no rows");
  Series s{label, {}, {}, {}};
  for (const ProfileRow& r : rows) {
    s.x.push_back(r.r);
    s.y.push_back(r.f_succ);
  }
  return render_chart({"Conditional fidelity profile", "|alpha|", "f_succ", false, "", 720, 480}, {s});
}

inline std::string group_label(double g) {
  if (std::isinf(g) || g == 1.0) return "control";
  char buf[32];
  std::snprintf(buf, sizeof buf, "g = %.6g", g);
  return buf;
}

/// D against F, one polyline per g in order of first appearance, points
/// ordered by m_c.
inline std::string plot_fd_curves(const std::vector<SweepRecord>& records) {
  if (records.empty()) throw std::invalid_argument("plot fd_curves: no rows");
  std::vector<double> order;
  std::map<double, std::vector<const SweepRecord*>> groups;
  for (const SweepRecord& r : records) {
    const double key = r.is_control() ? 1.0 : r.g;
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<Series> series;
  for (double key : order) {
    auto rows = groups[key];
    std::stable_sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->m_c < b->m_c; });
    Series s{group_label(key), {}, {}, {}};
    for (const SweepRecord* r : rows) {
      s.x.push_back(r->merit.F);
      s.y.push_back(r->merit.D);
    }
    series.push_back(std::move(s));
  }
  return render_chart({"Trade-off curves in the (F, D) plane", "F", "D", false, "", 720, 480}, series);
}

inline std::string plot_fd_density(const std::vector<SweepRecord>& records) {
  if (records.empty()) throw std::invalid_argument("plot fd_density: no rows");
  Series s{"records", {}, {}, {}};
  for (const SweepRecord& r : records) {
    s.x.push_back(r.merit.F);
    s.y.push_back(r.merit.D);
    s.color_value.push_back(r.merit.P_succ);
  }
  return render_chart({"Joint trade-off (colour: P_succ)", "F", "D", true, "P_succ", 720, 480}, {s});
}

}  // namespace cvtrade::io
