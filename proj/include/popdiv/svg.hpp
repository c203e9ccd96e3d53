#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace popdiv::svg {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Square scatter plot with a dashed identity line; each point is one
/// <circle>. Both axes share the range [0, max(x, y)] rounded up.
std::string scatter(std::span<const Point> points, std::string_view title, std::string_view x_label,
                    std::string_view y_label);

struct Bar {
  std::string label;
  double value = 0.0;
  std::optional<double> lo;  // error bar
  std::optional<double> hi;
};

/// Vertical bars from zero; y_max defaults to the largest bar or error top.
std::string bar_chart(std::span<const Bar> bars, std::string_view title, std::string_view y_label,
                      std::optional<double> y_max = std::nullopt);

std::string escape(std::string_view text);

}  // namespace popdiv::svg
