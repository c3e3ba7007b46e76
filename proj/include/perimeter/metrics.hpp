#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "perimeter/plant.hpp"

namespace perimeter {

/// Total time spent, veh*s: sum of (n1 + n2) * dt with the accumulation held
/// over each step. Throws DomainError for an empty or out-of-order trace.
double tts(const EpisodeTrace& trace);
/// TTS of a contiguous slice of steps.
double tts(std::span<const StepRecord> steps, double dt);

/// 100 (x_k - b_k) / b_k. Throws DomainError on length mismatch or b_k <= 0.
std::vector<double> normalize_over_baseline(std::span<const double> curve,
                                            std::span<const double> baseline);

/// Least-squares quadratic c0 + c1 x + c2 x^2.
struct Quadratic {
  std::array<double, 3> c{};
  double operator()(double x) const { return c[0] + x * (c[1] + x * c[2]); }
};

/// Throws DomainError with fewer than three distinct abscissae.
Quadratic polyfit2(std::span<const double> xs, std::span<const double> ys);

/// Coefficient of determination of a fit.
double r_squared(const Quadratic& fit, std::span<const double> xs, std::span<const double> ys);
/// Least-squares line (c2 = 0).
Quadratic polyfit1(std::span<const double> xs, std::span<const double> ys);

/// Population g1 = m3 / m2^1.5. Throws DomainError for n < 3 or zero variance.
double skewness(std::span<const double> values);

/// Disrupted-phase TTS curve of one method against disruption magnitude.
struct MethodCurve {
  std::string method;
  std::vector<double> magnitude;
  std::vector<double> tts;
};

struct ReportRow {
  std::string method;
  Quadratic fit;
  std::vector<double> fitted;
  std::vector<double> normalized;  // percent over the fitted baseline
  double skewness = 0.0;
  bool degenerate = false;  // zero-variance difference, skewness undefined
  int rank = 0;             // 1 = most negative skewness; 0 for degenerate rows
};

struct AntifragilityReport {
  std::string baseline;
  std::vector<double> magnitude;
  std::vector<ReportRow> rows;  // in input order
  std::vector<std::string> warnings;

  const ReportRow* find(const std::string& method) const;
};

/// Fits each curve, reconstructs it on the baseline's magnitudes, normalizes
/// over the fitted baseline and takes the skewness of the differences.
/// Throws DomainError when the baseline curve is absent; methods listed in
/// `expected` but missing from `curves` only add a warning.
AntifragilityReport antifragility_report(const std::vector<MethodCurve>& curves,
                                         const std::string& baseline,
                                         const std::vector<std::string>& expected = {});

/// method,skewness,rank,degenerate
void write_report_csv(std::ostream& out, const AntifragilityReport& report);
/// Full coefficients, curves and polar data (angle_deg, radius per point).
void write_report_json(std::ostream& out, const AntifragilityReport& report);

/// Polar mapping: magnitude range onto [0, 360) degrees.
std::vector<double> polar_angles(std::span<const double> magnitude);

}  // namespace perimeter
