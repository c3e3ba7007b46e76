#include "perimeter/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "perimeter/errors.hpp"

namespace perimeter {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b"};

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

std::string tick(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo <= 0.0) lo -= 0.5, hi += 0.5;
  }
};

void legend(std::ostringstream& os, const std::vector<Series>& series, double x, double y) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    const double yy = y + 16.0 * static_cast<double>(i);
    os << "<line x1=\"" << x << "\" y1=\"" << yy << "\" x2=\"" << x + 18 << "\" y2=\"" << yy
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>"
       << "<text x=\"" << x + 24 << "\" y=\"" << yy + 4 << "\" font-size=\"11\">"
       << escape(series[i].label) << "</text>\n";
  }
}

}  // namespace

std::string line_chart_svg(const std::vector<Series>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label) {
  const double w = 720, h = 420, left = 80, right = 170, top = 40, bottom = 50;
  const double pw = w - left - right, ph = h - top - bottom;
  Range xr, yr;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DomainError("svg: series " + s.label + " length mismatch");
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.settle();
  yr.settle();
  auto px = [&](double x) { return left + pw * (x - xr.lo) / (xr.hi - xr.lo); };
  auto py = [&](double y) { return top + ph * (1.0 - (y - yr.lo) / (yr.hi - yr.lo)); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    os << "<text x=\"" << px(fx) << "\" y=\"" << top + ph + 16
       << "\" font-size=\"10\" text-anchor=\"middle\">" << tick(fx) << "</text>";
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(fy) + 3
       << "\" font-size=\"10\" text-anchor=\"end\">" << tick(fy) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 10
     << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  os << "<text x=\"14\" y=\"" << top + ph / 2 << "\" font-size=\"12\" text-anchor=\"middle\" "
     << "transform=\"rotate(-90 14 " << top + ph / 2 << ")\">" << escape(y_label) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    os << "<polyline fill=\"none\" stroke=\"" << kPalette[i % std::size(kPalette)]
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < series[i].x.size(); ++k) {
      if (!std::isfinite(series[i].y[k])) continue;
      os << px(series[i].x[k]) << ',' << py(series[i].y[k]) << ' ';
    }
    os << "\"/>\n";
  }
  legend(os, series, left + pw + 14, top + 10);
  os << "</svg>\n";
  return os.str();
}

std::string polar_chart_svg(const std::vector<Series>& series, const std::string& title) {
  const double w = 620, h = 480, cx = 240, cy = 250, r_max = 190;
  Range rr;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DomainError("svg: series " + s.label + " length mismatch");
    for (double v : s.y) rr.add(v);
  }
  rr.add(0.0);
  rr.settle();
  auto radius = [&](double v) { return r_max * (0.15 + 0.85 * (v - rr.lo) / (rr.hi - rr.lo)); };
  auto at = [&](double deg, double r) {
    const double a = deg * std::numbers::pi / 180.0;
    return std::pair{cx + r * std::cos(a), cy - r * std::sin(a)};
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"20\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (double v : {rr.lo, 0.0, rr.hi}) {
    os << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << radius(v)
       << "\" fill=\"none\" stroke=\"" << (v == 0.0 ? "#000" : "#bbb") << "\"/>"
       << "<text x=\"" << cx + 3 << "\" y=\"" << cy - radius(v) - 2 << "\" font-size=\"10\">"
       << tick(v) << "%</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    os << "<polyline fill=\"none\" stroke=\"" << kPalette[i % std::size(kPalette)]
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < series[i].x.size(); ++k) {
      if (!std::isfinite(series[i].y[k])) continue;
      const auto [x, y] = at(series[i].x[k], radius(series[i].y[k]));
      os << x << ',' << y << ' ';
    }
    os << "\"/>\n";
  }
  legend(os, series, 460, 60);
  os << "</svg>\n";
  return os.str();
}

}  // namespace perimeter
