#include "sono/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "sono/error.hpp"

namespace sono::svg {

namespace {

constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c",
                                                "#ff7f0e", "#9467bd", "#8c564b"};
constexpr double kMargin = 48.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
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

}  // namespace

std::string line_chart(const std::vector<Series>& series, const ChartOptions& o) {
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  double y0 = x0;
  double y1 = -x0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) fail(ErrorCode::LengthMismatch, "series '" + s.label + "'");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x1 >= x0)) x0 = 0.0, x1 = 1.0;
  if (!(y1 >= y0)) y0 = 0.0, y1 = 1.0;
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;

  const double w = o.width;
  const double h = o.height;
  const double pw = w - 2 * kMargin;
  const double ph = h - 2 * kMargin;
  auto px = [&](double x) { return kMargin + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return h - kMargin - (y - y0) / (y1 - y0) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(o.width) +
         "\" height=\"" + std::to_string(o.height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(w / 2) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" +
         escape(o.title) + "</text>\n";
  out += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(h - kMargin) + "\" x2=\"" + num(w - kMargin) +
         "\" y2=\"" + num(h - kMargin) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kMargin) + "\" x2=\"" + num(kMargin) +
         "\" y2=\"" + num(h - kMargin) + "\" stroke=\"black\"/>\n";
  out += "<text x=\"" + num(kMargin) + "\" y=\"" + num(h - kMargin + 14) + "\">" + tick(x0) + "</text>\n";
  out += "<text x=\"" + num(w - kMargin) + "\" y=\"" + num(h - kMargin + 14) +
         "\" text-anchor=\"end\">" + tick(x1) + "</text>\n";
  out += "<text x=\"" + num(kMargin - 4) + "\" y=\"" + num(h - kMargin) + "\" text-anchor=\"end\">" +
         tick(y0) + "</text>\n";
  out += "<text x=\"" + num(kMargin - 4) + "\" y=\"" + num(kMargin + 4) + "\" text-anchor=\"end\">" +
         tick(y1) + "</text>\n";
  out += "<text x=\"" + num(w / 2) + "\" y=\"" + num(h - 10) + "\" text-anchor=\"middle\">" +
         escape(o.x_label) + "</text>\n";
  out += "<text x=\"12\" y=\"" + num(h / 2) + "\" transform=\"rotate(-90 12 " + num(h / 2) +
         ")\" text-anchor=\"middle\">" + escape(o.y_label) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % kColors.size()];
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out += num(px(s.x[i])) + ',' + num(py(s.y[i])) + ' ';
    }
    out += "\"/>\n";
    out += "<text x=\"" + num(w - kMargin - 4) + "\" y=\"" + num(kMargin + 14.0 * static_cast<double>(k)) +
           "\" text-anchor=\"end\" fill=\"" + color + "\">" + escape(s.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace sono::svg
