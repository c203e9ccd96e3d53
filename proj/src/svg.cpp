#include "popdiv/svg.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace popdiv::svg {

namespace {

constexpr double kMargin = 60.0;

// 1, 2, 5 x 10^k at or above v.
double nice_ceiling(double v) {
  if (!(v > 0.0)) return 1.0;
  const double p = std::pow(10.0, std::floor(std::log10(v)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * p >= v * (1.0 - 1e-12)) return m * p;
  }
  return 10.0 * p;
}

std::string header(double w, double h) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" viewBox=\"0 0 {0:.0f} "
      "{1:.0f}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"{0:.0f}\" height=\"{1:.0f}\" fill=\"white\"/>\n",
      w, h);
}

}  // namespace

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
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

std::string scatter(std::span<const Point> points, std::string_view title, std::string_view x_label,
                    std::string_view y_label) {
  constexpr double side = 400.0;
  double max_v = 0.0;
  for (const auto& p : points) max_v = std::max({max_v, p.x, p.y});
  const double top = nice_ceiling(max_v);
  auto px = [&](double x) { return kMargin + side * x / top; };
  auto py = [&](double y) { return kMargin + side - side * y / top; };

  std::string s = header(side + 2 * kMargin, side + 2 * kMargin);
  s += fmt::format("<text x=\"{:.1f}\" y=\"30\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                   kMargin + side / 2, escape(title));
  s += fmt::format("<rect x=\"{0:.1f}\" y=\"{0:.1f}\" width=\"{1:.1f}\" height=\"{1:.1f}\" fill=\"none\" "
                   "stroke=\"black\"/>\n",
                   kMargin, side);
  for (int i = 0; i <= 4; ++i) {
    const double v = top * i / 4.0;
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:g}</text>\n", px(v),
                     kMargin + side + 16, v);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:g}</text>\n", kMargin - 6, py(v) + 4, v);
  }
  s += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"gray\" "
                   "stroke-dasharray=\"4 4\"/>\n",
                   px(0), py(0), px(top), py(top));
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", kMargin + side / 2,
                   kMargin + side + 40, escape(x_label));
  s += fmt::format("<text x=\"16\" y=\"{0:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.1f})\">{1}"
                   "</text>\n",
                   kMargin + side / 2, escape(y_label));
  s += "<g fill=\"steelblue\" fill-opacity=\"0.6\">\n";
  for (const auto& p : points) {
    s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\"/>\n", px(p.x), py(p.y));
  }
  s += "</g>\n</svg>\n";
  return s;
}

std::string bar_chart(std::span<const Bar> bars, std::string_view title, std::string_view y_label,
                      std::optional<double> y_max) {
  constexpr double plot_h = 300.0;
  constexpr double bar_w = 28.0;
  constexpr double gap = 12.0;
  constexpr double label_h = 120.0;
  const double plot_w = std::max(200.0, static_cast<double>(bars.size()) * (bar_w + gap) + gap);

  double max_v = 0.0;
  for (const auto& b : bars) max_v = std::max({max_v, b.value, b.hi.value_or(0.0)});
  const double top = y_max.value_or(nice_ceiling(max_v));
  auto py = [&](double y) { return kMargin + plot_h - plot_h * std::clamp(y, 0.0, top) / top; };

  std::string s = header(plot_w + 2 * kMargin, plot_h + kMargin + label_h);
  s += fmt::format("<text x=\"{:.1f}\" y=\"30\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                   kMargin + plot_w / 2, escape(title));
  s += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"black\"/>\n", kMargin,
                   kMargin + plot_h, kMargin + plot_w);
  s += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n", kMargin,
                   kMargin, kMargin + plot_h);
  for (int i = 0; i <= 4; ++i) {
    const double v = top * i / 4.0;
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:g}</text>\n", kMargin - 6, py(v) + 4, v);
  }
  s += fmt::format("<text x=\"16\" y=\"{0:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.1f})\">{1}"
                   "</text>\n",
                   kMargin + plot_h / 2, escape(y_label));
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double x = kMargin + gap + static_cast<double>(i) * (bar_w + gap);
    const double y = py(b.value);
    s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.2f}\" width=\"{:.1f}\" height=\"{:.2f}\" fill=\"steelblue\"/>\n", x,
                     y, bar_w, kMargin + plot_h - y);
    if (b.lo && b.hi) {
      const double cx = x + bar_w / 2;
      s += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.2f}\" x2=\"{0:.1f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", cx,
                       py(*b.lo), py(*b.hi));
    }
    const double lx = x + bar_w / 2;
    const double ly = kMargin + plot_h + 10;
    s += fmt::format("<text x=\"{0:.1f}\" y=\"{1:.1f}\" text-anchor=\"end\" transform=\"rotate(-60 {0:.1f} "
                     "{1:.1f})\">{2}</text>\n",
                     lx, ly, escape(b.label));
  }
  s += "</svg>\n";
  return s;
}

}  // namespace popdiv::svg
