#include "perimeter/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <Eigen/Dense>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "perimeter/errors.hpp"

namespace perimeter {

double tts(std::span<const StepRecord> steps, double dt) {
  double sum = 0.0;
  for (const StepRecord& s : steps) {
    const double n = s.state.region(0) + s.state.region(1);
    if (!std::isfinite(n)) throw DomainError("tts: non-finite accumulation at step " +
                                             std::to_string(s.step));
    sum += n * dt;
  }
  return sum;
}

double tts(const EpisodeTrace& trace) {
  if (trace.steps.empty()) throw DomainError("tts: empty trace");
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    if (trace.steps[k].step != static_cast<int>(k)) {
      throw DomainError("tts: incomplete trace, step " + std::to_string(k) + " missing");
    }
  }
  return tts(trace.steps, trace.dt);
}

std::vector<double> normalize_over_baseline(std::span<const double> curve,
                                            std::span<const double> baseline) {
  if (curve.size() != baseline.size()) {
    throw DomainError("normalize_over_baseline: length mismatch");
  }
  std::vector<double> out(curve.size());
  for (std::size_t k = 0; k < curve.size(); ++k) {
    if (!(baseline[k] > 0.0)) {
      throw DomainError("normalize_over_baseline: baseline entry " + std::to_string(k) +
                        " is not positive");
    }
    out[k] = 100.0 * (curve[k] - baseline[k]) / baseline[k];
  }
  return out;
}

namespace {

Quadratic fit_degree(std::span<const double> xs, std::span<const double> ys, int degree) {
  if (xs.size() != ys.size()) throw DomainError("polyfit: length mismatch");
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
  if (distinct < degree + 1) {
    throw DomainError("polyfit: need " + std::to_string(degree + 1) + " distinct x values");
  }
  const double n = static_cast<double>(xs.size());
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double s = 0.0;
  for (double x : xs) s = std::max(s, std::abs(x - m));

  const int p = degree + 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double t = (xs[i] - m) / s;
    double pw[3] = {1.0, t, t * t};
    for (int r = 0; r < p; ++r) {
      b(r) += pw[r] * ys[i];
      for (int c = 0; c < p; ++c) a(r, c) += pw[r] * pw[c];
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(1e-12);
  if (lu.rank() < p) throw DomainError("polyfit: rank-deficient normal equations");
  const Eigen::VectorXd t = lu.solve(b);
  const double a0 = t(0);
  const double a1 = t(1);
  const double a2 = degree == 2 ? t(2) : 0.0;

  Quadratic q;
  q.c[2] = a2 / (s * s);
  q.c[1] = a1 / s - 2.0 * a2 * m / (s * s);
  q.c[0] = a0 - a1 * m / s + a2 * m * m / (s * s);
  return q;
}

}  // namespace

Quadratic polyfit2(std::span<const double> xs, std::span<const double> ys) {
  return fit_degree(xs, ys, 2);
}

Quadratic polyfit1(std::span<const double> xs, std::span<const double> ys) {
  return fit_degree(xs, ys, 1);
}

double r_squared(const Quadratic& fit, std::span<const double> xs, std::span<const double> ys) {
  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ss_res += (ys[i] - fit(xs[i])) * (ys[i] - fit(xs[i]));
    ss_tot += (ys[i] - mean) * (ys[i] - mean);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

double skewness(std::span<const double> values) {
  if (values.size() < 3) throw DomainError("skewness: need at least 3 values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : values) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (!(m2 > 0.0)) throw DomainError("skewness: zero variance");
  return m3 / std::pow(m2, 1.5);
}

const ReportRow* AntifragilityReport::find(const std::string& method) const {
  for (const auto& r : rows) {
    if (r.method == method) return &r;
  }
  return nullptr;
}

AntifragilityReport antifragility_report(const std::vector<MethodCurve>& curves,
                                         const std::string& baseline,
                                         const std::vector<std::string>& expected) {
  AntifragilityReport report;
  report.baseline = baseline;
  const auto base_it = std::find_if(curves.begin(), curves.end(),
                                    [&](const MethodCurve& c) { return c.method == baseline; });
  if (base_it == curves.end()) throw DomainError("report: baseline method " + baseline + " missing");
  for (const auto& m : expected) {
    const bool present = std::any_of(curves.begin(), curves.end(),
                                     [&](const MethodCurve& c) { return c.method == m; });
    if (!present) {
      report.warnings.push_back("method " + m + " missing from study");
      spdlog::warn("report: method {} missing from study", m);
    }
  }

  report.magnitude = base_it->magnitude;
  const Quadratic base_fit = polyfit2(base_it->magnitude, base_it->tts);
  std::vector<double> base_fitted;
  for (double x : report.magnitude) base_fitted.push_back(base_fit(x));

  for (const MethodCurve& c : curves) {
    ReportRow row;
    row.method = c.method;
    row.fit = polyfit2(c.magnitude, c.tts);
    for (double x : report.magnitude) row.fitted.push_back(row.fit(x));
    row.normalized = normalize_over_baseline(row.fitted, base_fitted);
    const double spread = *std::max_element(row.normalized.begin(), row.normalized.end()) -
                          *std::min_element(row.normalized.begin(), row.normalized.end());
    if (c.method == baseline || spread <= 1e-9) {
      row.degenerate = true;
    } else {
      try {
        row.skewness = skewness(row.normalized);
      } catch (const DomainError&) {
        row.degenerate = true;
      }
    }
    report.rows.push_back(std::move(row));
  }

  std::vector<ReportRow*> ranked;
  for (auto& r : report.rows) {
    if (!r.degenerate) ranked.push_back(&r);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const ReportRow* a, const ReportRow* b) { return a->skewness < b->skewness; });
  for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i]->rank = static_cast<int>(i) + 1;
  return report;
}

std::vector<double> polar_angles(std::span<const double> magnitude) {
  std::vector<double> out;
  if (magnitude.empty()) return out;
  const auto [lo, hi] = std::minmax_element(magnitude.begin(), magnitude.end());
  const double span = *hi - *lo;
  for (double m : magnitude) out.push_back(span > 0.0 ? 359.0 * (m - *lo) / span : 0.0);
  return out;
}

void write_report_csv(std::ostream& out, const AntifragilityReport& report) {
  nlohmann::json num;
  out << "method,skewness,rank,degenerate\n";
  for (const auto& r : report.rows) {
    num = r.skewness;
    out << r.method << ',' << (r.degenerate ? std::string("nan") : num.dump()) << ',' << r.rank
        << ',' << (r.degenerate ? "true" : "false") << '\n';
  }
}

void write_report_json(std::ostream& out, const AntifragilityReport& report) {
  nlohmann::json j;
  j["baseline"] = report.baseline;
  j["magnitude"] = report.magnitude;
  j["angle_deg"] = polar_angles(report.magnitude);
  j["warnings"] = report.warnings;
  j["methods"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json m;
    m["method"] = r.method;
    m["coefficients"] = r.fit.c;
    m["fitted_tts"] = r.fitted;
    m["normalized_percent"] = r.normalized;
    m["skewness"] = r.degenerate ? nlohmann::json(nullptr) : nlohmann::json(r.skewness);
    m["rank"] = r.rank;
    m["degenerate"] = r.degenerate;
    j["methods"].push_back(std::move(m));
  }
  out << j.dump(2) << '\n';
}

}  // namespace perimeter
