#pragma once

// Plot data: gnuplot-ready .dat files and a small self-contained SVG line chart.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "levyim/format.hpp"
#include "levyim/table.hpp"

namespace levyim {

struct PlotAxes {
  std::string x;                ///< column on the horizontal axis
  std::vector<std::string> y;   ///< one series per column
  std::string title;
  bool log_y = false;
};

struct PlotResult {
  std::filesystem::path data;
  std::filesystem::path svg;    ///< empty when no SVG was written
  std::vector<bool> decreasing; ///< per series: strictly decreasing along the rows
  std::string warning;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace detail

/// Writes `<stem>.dat` (x then one column per series) and, for a non-empty
/// table, `<stem>.svg`. Missing columns raise std::invalid_argument naming them.
inline PlotResult emit_plot_data(const Table& table, const PlotAxes& axes, const std::filesystem::path& stem) {
  const std::size_t xi = table.column_index(axes.x);
  std::vector<std::size_t> yi;
  for (const auto& c : axes.y) yi.push_back(table.column_index(c));

  PlotResult res;
  res.data = stem;
  res.data += ".dat";
  {
    std::ofstream os(res.data);
    if (!table.rows.empty()) {
      os << "# " << axes.x;
      for (const auto& c : axes.y) os << ' ' << c;
      os << '\n';
    }
    for (const auto& r : table.rows) {
      os << fmt_double(r[xi]);
      for (std::size_t j : yi) os << ' ' << fmt_double(r[j]);
      os << '\n';
    }
  }
  for (std::size_t j : yi) {
    bool dec = table.rows.size() > 1;
    for (std::size_t i = 1; i < table.rows.size(); ++i) dec = dec && table.rows[i][j] < table.rows[i - 1][j];
    res.decreasing.push_back(dec);
  }
  if (table.rows.empty()) {
    res.warning = "empty table: no SVG written";
    return res;
  }

  auto ty = [&](double v) { return axes.log_y ? std::log10(std::max(v, 1e-300)) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& r : table.rows) {
    x0 = std::min(x0, r[xi]);
    x1 = std::max(x1, r[xi]);
    for (std::size_t j : yi) {
      if (axes.log_y && !(r[j] > 0.0)) continue;
      y0 = std::min(y0, ty(r[j]));
      y1 = std::max(y1, ty(r[j]));
    }
  }
  if (!(x1 > x0)) { x0 -= 0.5; x1 += 0.5; }
  if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
  const double W = 640, H = 400, L = 70, R = 20, Tm = 40, B = 50;
  auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - Tm - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  res.svg = stem;
  res.svg += ".svg";
  std::ofstream os(res.svg);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << detail::svg_escape(axes.title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
     << detail::svg_escape(axes.x) << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    const double xp = L + (W - L - R) * k / 4.0, yp = H - B - (H - Tm - B) * k / 4.0;
    os << "<text x=\"" << xp << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
       << fmt_double(std::round(xv * 1e4) / 1e4) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << yp + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
       << (axes.log_y ? "1e" : "") << fmt_double(std::round(yv * 1e4) / 1e4) << "</text>\n";
  }
  for (std::size_t s = 0; s < yi.size(); ++s) {
    const char* col = colors[s % 5];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
    for (const auto& r : table.rows) {
      if (axes.log_y && !(r[yi[s]] > 0.0)) continue;
      os << px(r[xi]) << ',' << py(r[yi[s]]) << ' ';
    }
    os << "\"/>\n";
    for (const auto& r : table.rows) {
      if (axes.log_y && !(r[yi[s]] > 0.0)) continue;
      os << "<circle cx=\"" << px(r[xi]) << "\" cy=\"" << py(r[yi[s]]) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    }
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << Tm + 14 * (s + 1) << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
       << col << "\">" << detail::svg_escape(axes.y[s]) << (res.decreasing[s] ? " (decreasing)" : " (not monotone)")
       << "</text>\n";
  }
  os << "</svg>\n";
  return res;
}

}  // namespace levyim
