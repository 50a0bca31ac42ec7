#pragma once

// Minimal static SVG line charts for the benchmark report. Output depends only
// on the data, so identical runs produce identical files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace vibcodec::cli {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log2_x = true;
};

namespace detail {

inline std::string fmt(double v, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
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

}  // namespace detail

inline std::string render_line_chart(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 150, kTop = 40, kBottom = 55;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
  auto tx = [&](double x) { return spec.log2_x ? std::log2(x) : x; };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(kW, 0) + "\" height=\"" +
         detail::fmt(kH, 0) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + detail::fmt(kW / 2, 0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         detail::escape_xml(spec.title) + "</text>\n";
  out += "<rect x=\"" + detail::fmt(kLeft) + "\" y=\"" + detail::fmt(kTop) + "\" width=\"" + detail::fmt(pw) +
         "\" height=\"" + detail::fmt(ph) + "\" fill=\"none\" stroke=\"#444\"/>\n";

  // Ticks: every distinct x value, five evenly spaced y values.
  std::vector<double> xs;
  for (const auto& s : series) xs.insert(xs.end(), s.x.begin(), s.x.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (double x : xs) {
    out += "<text x=\"" + detail::fmt(px(x)) + "\" y=\"" + detail::fmt(kTop + ph + 18) +
           "\" text-anchor=\"middle\">" + detail::fmt(x, x == std::floor(x) ? 0 : 2) + "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double y = y0 + (y1 - y0) * i / 4.0;
    out += "<line x1=\"" + detail::fmt(kLeft) + "\" x2=\"" + detail::fmt(kLeft + pw) + "\" y1=\"" + detail::fmt(py(y)) +
           "\" y2=\"" + detail::fmt(py(y)) + "\" stroke=\"#ddd\"/>\n";
    out += "<text x=\"" + detail::fmt(kLeft - 6) + "\" y=\"" + detail::fmt(py(y) + 4) + "\" text-anchor=\"end\">" +
           detail::fmt(y, std::abs(y1 - y0) < 1 ? 4 : 2) + "</text>\n";
  }
  out += "<text x=\"" + detail::fmt(kLeft + pw / 2) + "\" y=\"" + detail::fmt(kH - 12) + "\" text-anchor=\"middle\">" +
         detail::escape_xml(spec.x_label) + "</text>\n";
  out += "<text transform=\"translate(18," + detail::fmt(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         detail::escape_xml(spec.y_label) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::string color = kColors[k % (sizeof kColors / sizeof *kColors)];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      points += detail::fmt(px(s.x[i])) + "," + detail::fmt(py(s.y[i])) + " ";
      out += "<circle cx=\"" + detail::fmt(px(s.x[i])) + "\" cy=\"" + detail::fmt(py(s.y[i])) + "\" r=\"3\" fill=\"" +
             color + "\"/>\n";
    }
    out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
    out += "<line x1=\"" + detail::fmt(kLeft + pw + 12) + "\" x2=\"" + detail::fmt(kLeft + pw + 32) + "\" y1=\"" +
           detail::fmt(ly) + "\" y2=\"" + detail::fmt(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + detail::fmt(kLeft + pw + 38) + "\" y=\"" + detail::fmt(ly + 4) + "\">" +
           detail::escape_xml(s.name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace vibcodec::cli
