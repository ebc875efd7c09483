#include "fisheyex/pipeline/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

namespace fisheyex::pipeline {

namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::vector<Series>& series) {
  std::size_t n = 1;
  bool positive = true;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Series& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      positive = positive && v > 0.0;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(lo <= hi)) lo = 0.0, hi = 1.0;
  auto ty = [&](double v) { return positive ? std::log10(v) : v; };
  double ylo = ty(lo), yhi = ty(hi);
  if (yhi - ylo < 1e-12) ylo -= 0.5, yhi += 0.5;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](std::size_t i) { return kLeft + (n > 1 ? pw * i / static_cast<double>(n - 1) : 0.0); };
  auto py = [&](double v) { return kTop + ph * (1.0 - (ty(v) - ylo) / (yhi - ylo)); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">{3}</text>\n"
      "<rect x=\"{2}\" y=\"{4}\" width=\"{5}\" height=\"{6}\" fill=\"none\" stroke=\"#444\"/>\n",
      kWidth, kHeight, kLeft, escape(title), kTop, pw, ph);
  for (int t = 0; t <= 4; ++t) {
    const double yv = ylo + (yhi - ylo) * t / 4.0;
    const double label = positive ? std::pow(10.0, yv) : yv;
    const double y = kTop + ph * (1.0 - t / 4.0);
    out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
                       "text-anchor=\"end\">{:.3g}</text>\n",
                       kLeft - 6, y + 4, label);
    const std::size_t xi = (n - 1) * t / 4;
    out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" "
                       "text-anchor=\"middle\">{}</text>\n",
                       px(xi), kHeight - kBottom + 18, xi + 1);
  }
  out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" "
                     "text-anchor=\"middle\">iteration</text>\n",
                     kLeft + pw / 2, kHeight - 12);
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    std::string points;
    for (std::size_t i = 0; i < series[s].values.size(); ++i) {
      const double v = series[s].values[i];
      if (!std::isfinite(v) || (positive && v <= 0.0)) continue;
      points += fmt::format("{:.2f},{:.2f} ", px(i), py(v));
    }
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, points);
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{}\">{}</text>\n",
                       kWidth - kRight + 10, kTop + 16 + 18 * s, color, escape(series[s].name));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace fisheyex::pipeline
