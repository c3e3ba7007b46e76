#pragma once

#include <string>
#include <vector>

namespace perimeter {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Plain SVG line chart with axes, tick labels and a legend.
std::string line_chart_svg(const std::vector<Series>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label);

/// Polar chart: x is the angle in degrees, y the signed radius. The radial
/// axis is offset so that negative values stay inside the zero ring.
std::string polar_chart_svg(const std::vector<Series>& series, const std::string& title);

}  // namespace perimeter
