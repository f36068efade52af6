#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "fixbias/report/csv.hpp"

namespace fixbias::report {

struct PlotSpec {
  std::string x;
  std::vector<std::string> y;
  bool logx = false;
  bool logy = false;
  std::string title;
};

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo;
  double hi;
  bool log;

  double map(double v) const {
    const double t = log ? std::log10(v) : v;
    return hi > lo ? (t - lo) / (hi - lo) : 0.5;
  }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      const int step = std::max(1, static_cast<int>(std::ceil((hi - lo) / 8.0)));
      for (int e = static_cast<int>(std::ceil(lo)); e <= static_cast<int>(std::floor(hi)); e += step)
        out.push_back(std::pow(10.0, e));
      return out;
    }
    if (!(hi > lo)) return {lo};
    const double raw = (hi - lo) / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
      step = m * mag;
      if (step >= raw) break;
    }
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(t);
    return out;
  }
};

inline Axis make_axis(const std::vector<double>& v, bool log) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : v) {
    const double t = log ? std::log10(x) : x;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (lo == hi) {
    lo -= log ? 0.5 : (lo == 0.0 ? 1.0 : 0.5 * std::abs(lo));
    hi += log ? 0.5 : (hi == 0.0 ? 1.0 : 0.5 * std::abs(hi));
  }
  return {lo, hi, log};
}

}  // namespace detail

/// Renders a line plot of one or more y columns against x. Rows with a
/// missing value, or a nonpositive value on a log axis, are skipped.
inline std::string render_svg(const CsvTable& table, const PlotSpec& spec) {
  if (table.size() == 0) throw InvalidArgument("CSV has no data rows; nothing to plot");
  if (spec.y.empty()) throw InvalidArgument("plot needs at least one y column");
  const auto xs = table.column(spec.x);
  std::vector<std::vector<std::optional<double>>> ys;
  for (const auto& name : spec.y) ys.push_back(table.column(name));

  std::vector<std::vector<std::pair<double, double>>> series(ys.size());
  std::vector<double> all_x;
  std::vector<double> all_y;
  auto usable = [](const std::optional<double>& v, bool log) {
    return v && std::isfinite(*v) && (!log || *v > 0.0);
  };
  for (std::size_t s = 0; s < ys.size(); ++s) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!usable(xs[i], spec.logx) || !usable(ys[s][i], spec.logy)) continue;
      series[s].emplace_back(*xs[i], *ys[s][i]);
      all_x.push_back(*xs[i]);
      all_y.push_back(*ys[s][i]);
    }
  }
  if (all_x.empty()) throw InvalidArgument("no plottable points (check for nonpositive values on log axes)");

  constexpr double width = 640.0;
  constexpr double height = 420.0;
  constexpr double left = 80.0;
  constexpr double right = 20.0;
  constexpr double top = 40.0;
  constexpr double bottom = 60.0;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  const auto ax = detail::make_axis(all_x, spec.logx);
  const auto ay = detail::make_axis(all_y, spec.logy);
  auto px = [&](double v) { return left + pw * ax.map(v); };
  auto py = [&](double v) { return top + ph * (1.0 - ay.map(v)); };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n";
  s += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    s += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         detail::escape_xml(spec.title) + "</text>\n";
  }
  s += "<rect x=\"" + detail::fmt("%.2f", left) + "\" y=\"" + detail::fmt("%.2f", top) + "\" width=\"" +
       detail::fmt("%.2f", pw) + "\" height=\"" + detail::fmt("%.2f", ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";

  const char* tick_fmt = "%.3g";
  for (double t : ax.ticks()) {
    const double x = px(t);
    s += "<line x1=\"" + detail::fmt("%.2f", x) + "\" y1=\"" + detail::fmt("%.2f", top + ph) + "\" x2=\"" +
         detail::fmt("%.2f", x) + "\" y2=\"" + detail::fmt("%.2f", top + ph + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + detail::fmt("%.2f", x) + "\" y=\"" + detail::fmt("%.2f", top + ph + 20) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + detail::fmt(tick_fmt, t) +
         "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double y = py(t);
    s += "<line x1=\"" + detail::fmt("%.2f", left - 5) + "\" y1=\"" + detail::fmt("%.2f", y) + "\" x2=\"" +
         detail::fmt("%.2f", left) + "\" y2=\"" + detail::fmt("%.2f", y) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + detail::fmt("%.2f", left - 8) + "\" y=\"" + detail::fmt("%.2f", y + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + detail::fmt(tick_fmt, t) +
         "</text>\n";
  }
  s += "<text x=\"" + detail::fmt("%.2f", left + pw / 2) + "\" y=\"" + detail::fmt("%.2f", height - 15) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + detail::escape_xml(spec.x) +
       (spec.logx ? " (log)" : "") + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* colour = palette[k % 6];
    s += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[k].size(); ++i) {
      if (i) s += ' ';
      s += detail::fmt("%.2f", px(series[k][i].first)) + "," + detail::fmt("%.2f", py(series[k][i].second));
    }
    s += "\"/>\n";
    const double ly = top + 16.0 + 16.0 * static_cast<double>(k);
    s += "<text x=\"" + detail::fmt("%.2f", left + pw - 8) + "\" y=\"" + detail::fmt("%.2f", ly) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" + colour + "\">" +
         detail::escape_xml(spec.y[k]) + (spec.logy ? " (log)" : "") + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

/// Reads `csv_path`, renders it and writes `svg_path` atomically. Nothing is
/// written when the CSV is empty or a column is missing.
inline void emit_svg(const std::filesystem::path& csv_path, const PlotSpec& spec,
                     const std::filesystem::path& svg_path) {
  const std::string svg = render_svg(read_csv(csv_path), spec);
  write_atomic(svg_path, svg);
}

}  // namespace fixbias::report
