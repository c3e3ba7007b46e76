#include "perimeter/mfd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "perimeter/errors.hpp"

namespace perimeter {

namespace {

constexpr double kSecondsPerHour = 3600.0;
constexpr double kCritTolerance = 0.1;

double cubic_value(const CubicMfd& m, double x) { return ((m.a * x + m.b) * x + m.c) * x; }

double cubic_derivative(const CubicMfd& m, double x) {
  return (3.0 * m.a * x + 2.0 * m.b) * x + m.c;
}

// Local maximum of the cubic on x > 0, or NaN when there is none.
double cubic_local_max(const CubicMfd& m) {
  if (m.a == 0.0) {
    return m.b < 0.0 ? -m.c / (2.0 * m.b) : std::numeric_limits<double>::quiet_NaN();
  }
  const double disc = 4.0 * m.b * m.b - 12.0 * m.a * m.c;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double s = std::sqrt(disc);
  for (double r : {(-2.0 * m.b - s) / (6.0 * m.a), (-2.0 * m.b + s) / (6.0 * m.a)}) {
    if (r > 0.0 && 6.0 * m.a * r + 2.0 * m.b < 0.0) return r;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// Smallest root of a x^2 + b x + c above `after`, or +inf.
double cubic_first_root_after(const CubicMfd& m, double after) {
  double best = std::numeric_limits<double>::infinity();
  if (m.a == 0.0) {
    if (m.b != 0.0) {
      const double r = -m.c / m.b;
      if (r > after) best = r;
    }
    return best;
  }
  const double disc = m.b * m.b - 4.0 * m.a * m.c;
  if (disc < 0.0) return best;
  const double s = std::sqrt(disc);
  for (double r : {(-m.b - s) / (2.0 * m.a), (-m.b + s) / (2.0 * m.a)}) {
    if (r > after) best = std::min(best, r);
  }
  return best;
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

}  // namespace

MfdSpec::MfdSpec(Form form, double accumulation_scale, double flow_scale)
    : form_(std::move(form)), accumulation_scale_(accumulation_scale), flow_scale_(flow_scale) {
  if (!(accumulation_scale_ > 0.0) || !(flow_scale_ > 0.0)) {
    throw DomainError("MFD axis scales must be positive");
  }
  if (const auto* cubic = std::get_if<CubicMfd>(&form_)) {
    cubic_crit_ = cubic_local_max(*cubic);
    if (!std::isfinite(cubic_crit_)) throw InvariantError("cubic MFD has no interior maximum");
    const double root = cubic_first_root_after(*cubic, cubic_crit_);
    if (root <= cubic->n_jam || cubic->n_jam <= 0.0) {
      if (!std::isfinite(root)) throw DomainError("cubic MFD needs a jam accumulation");
      cubic_cap_ = root;
      taper_ = 0.0;
    } else {
      if (cubic->n_jam <= cubic_crit_) {
        throw DomainError("jam accumulation must exceed the critical accumulation");
      }
      cubic_cap_ = cubic->n_jam;
      taper_ = cubic_value(*cubic, cubic_cap_);
    }
  } else if (const auto* cuts = std::get_if<SmoothedCutsMfd>(&form_)) {
    if (!(cuts->free_flow_speed > 0.0) || !(cuts->capacity > 0.0) ||
        !(cuts->backward_wave > 0.0) || !(cuts->n_jam > 0.0)) {
      throw DomainError("cut parameters must be positive");
    }
    if (!(cuts->lambda > 0.0)) throw DomainError("lambda must be positive");
  } else {
    const auto& sampled = std::get<SampledMfd>(form_);
    if (!sampled.flow || sampled.flow->size() < 3 || !(sampled.spacing > 0.0)) {
      throw DomainError("sampled MFD needs at least 3 samples and positive spacing");
    }
  }

  n_cap_ = accumulation_scale_ * base_cap();
  if (!std::holds_alternative<SampledMfd>(form_) && slope_sign_changes(*this) != 1) {
    throw InvariantError("MFD is not unimodal on [0, n_cap]");
  }
  n_crit_ = critical_accumulation(*this);
  max_flow_ = flow(n_crit_);
  if (!(n_crit_ > 0.0 && n_crit_ < n_cap_)) {
    throw InvariantError("critical accumulation must lie strictly inside (0, n_cap)");
  }
}

MfdSpec MfdSpec::cubic(double a, double b, double c, double n_jam) {
  return MfdSpec(CubicMfd{a, b, c, n_jam});
}

MfdSpec MfdSpec::smoothed_cuts(double free_flow_speed, double capacity, double backward_wave,
                               double n_jam, double lambda) {
  return MfdSpec(SmoothedCutsMfd{free_flow_speed, capacity, backward_wave, n_jam, lambda});
}

MfdSpec MfdSpec::sampled(double spacing, std::vector<double> flow) {
  return MfdSpec(
      SampledMfd{spacing, std::make_shared<const std::vector<double>>(std::move(flow))});
}

double MfdSpec::base_cap() const {
  return std::visit(
      [this](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, CubicMfd>) {
          return cubic_cap_;
        } else if constexpr (std::is_same_v<T, SmoothedCutsMfd>) {
          return f.n_jam;
        } else {
          return f.spacing * static_cast<double>(f.flow->size() - 1);
        }
      },
      form_);
}

double MfdSpec::base_flow(double x) const {
  return std::visit(
      [this, x](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, CubicMfd>) {
          if (x >= cubic_cap_) return 0.0;
          double v = cubic_value(f, x);
          if (taper_ != 0.0 && x > cubic_crit_) {
            const double r = (x - cubic_crit_) / (cubic_cap_ - cubic_crit_);
            v -= taper_ * r * r;
          }
          return std::max(v, 0.0) / kSecondsPerHour;
        } else if constexpr (std::is_same_v<T, SmoothedCutsMfd>) {
          if (x >= f.n_jam) return 0.0;
          return smoothed_cuts_flow(f.free_flow_speed, f.capacity, f.backward_wave, f.n_jam,
                                    f.lambda, x);
        } else {
          const auto& g = *f.flow;
          const double pos = x / f.spacing;
          const auto last = g.size() - 1;
          if (pos >= static_cast<double>(last)) return 0.0;
          const auto i = static_cast<std::size_t>(pos);
          const double t = pos - static_cast<double>(i);
          return std::max(0.0, g[i] + t * (g[i + 1] - g[i]));
        }
      },
      form_);
}

double MfdSpec::flow(double n) const {
  if (std::isnan(n)) throw NumericError("accumulation is NaN");
  if (n < 0.0) throw DomainError("accumulation must be non-negative");
  if (n >= n_cap_) return 0.0;
  return flow_scale_ * base_flow(n / accumulation_scale_);
}

double MfdSpec::slope(double n) const {
  if (n < 0.0) throw DomainError("accumulation must be non-negative");
  if (n >= n_cap_) return 0.0;
  const double x = n / accumulation_scale_;
  const double chain = flow_scale_ / accumulation_scale_;
  if (const auto* cubic = std::get_if<CubicMfd>(&form_)) {
    double v = cubic_value(*cubic, x);
    double d = cubic_derivative(*cubic, x);
    if (taper_ != 0.0 && x > cubic_crit_) {
      const double span = cubic_cap_ - cubic_crit_;
      const double r = (x - cubic_crit_) / span;
      v -= taper_ * r * r;
      d -= 2.0 * taper_ * r / span;
    }
    return (v <= 0.0 && x > cubic_crit_) ? 0.0 : chain * d / kSecondsPerHour;
  }
  if (const auto* cuts = std::get_if<SmoothedCutsMfd>(&form_)) {
    const double q1 = cuts->free_flow_speed * x / cuts->capacity;
    const double q3 = cuts->backward_wave * (cuts->n_jam - x) / cuts->capacity;
    const double qmin = std::min({q1, 1.0, q3});
    const double e1 = std::exp(-(q1 - qmin) / cuts->lambda);
    const double e2 = std::exp(-(1.0 - qmin) / cuts->lambda);
    const double e3 = std::exp(-(q3 - qmin) / cuts->lambda);
    const double sum = e1 + e2 + e3;
    const double soft = qmin - cuts->lambda * std::log(sum);
    if (soft <= 0.0) return 0.0;
    return chain * (e1 * cuts->free_flow_speed - e3 * cuts->backward_wave) / sum;
  }
  const auto& sampled = std::get<SampledMfd>(form_);
  const auto& g = *sampled.flow;
  const auto i = std::min(static_cast<std::size_t>(x / sampled.spacing), g.size() - 2);
  return chain * (g[i + 1] - g[i]) / sampled.spacing;
}

MfdSpec MfdSpec::rescaled(double accumulation_factor, double flow_factor) const {
  return MfdSpec(form_, accumulation_scale_ * accumulation_factor, flow_scale_ * flow_factor);
}

bool MfdSpec::operator==(const MfdSpec& other) const {
  if (accumulation_scale_ != other.accumulation_scale_ || flow_scale_ != other.flow_scale_ ||
      form_.index() != other.form_.index()) {
    return false;
  }
  if (const auto* a = std::get_if<CubicMfd>(&form_)) {
    const auto& b = std::get<CubicMfd>(other.form_);
    return a->a == b.a && a->b == b.b && a->c == b.c && a->n_jam == b.n_jam;
  }
  if (const auto* a = std::get_if<SmoothedCutsMfd>(&form_)) {
    const auto& b = std::get<SmoothedCutsMfd>(other.form_);
    return a->free_flow_speed == b.free_flow_speed && a->capacity == b.capacity &&
           a->backward_wave == b.backward_wave && a->n_jam == b.n_jam && a->lambda == b.lambda;
  }
  const auto& a = std::get<SampledMfd>(form_);
  const auto& b = std::get<SampledMfd>(other.form_);
  return a.spacing == b.spacing && (a.flow == b.flow || *a.flow == *b.flow);
}

double completion_rate(const MfdSpec& spec, double n) { return spec.flow(n); }

double critical_accumulation(const MfdSpec& spec) {
  if (const auto* cubic = std::get_if<CubicMfd>(&spec.form())) {
    return spec.accumulation_scale() * cubic_local_max(*cubic);
  }
  if (const auto* sampled = std::get_if<SampledMfd>(&spec.form())) {
    // Bracket the best sample, then refine within its neighbours.
    const auto& g = *sampled->flow;
    const auto best = static_cast<std::size_t>(std::max_element(g.begin(), g.end()) - g.begin());
    const double step = sampled->spacing * spec.accumulation_scale();
    const double lo = step * static_cast<double>(best == 0 ? 0 : best - 1);
    const double hi = std::min(step * static_cast<double>(best + 1), spec.n_cap());
    return golden_section_argmax([&](double n) { return spec.flow(n); }, lo, hi,
                                 kCritTolerance);
  }
  return golden_section_argmax([&](double n) { return spec.flow(n); }, 0.0, spec.n_cap(),
                               kCritTolerance);
}

MfdSpec apply_speed_drop(const MfdSpec& spec, double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("speed drop must be in [0, 1)");
  if (delta == 0.0) return spec;
  return spec.rescaled(1.0, 1.0 - delta);
}

MfdSpec apply_capacity_drop(const MfdSpec& spec, double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("capacity drop must be in [0, 1)");
  if (delta == 0.0) return spec;
  return spec.rescaled(1.0 - delta, 1.0 - delta);
}

double smoothed_cuts_flow(double free_flow_speed, double capacity, double backward_wave,
                          double n_jam, double lambda, double n) {
  check_finite(n, "accumulation");
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  if (!(free_flow_speed > 0.0) || !(capacity > 0.0) || !(backward_wave > 0.0) ||
      !(n_jam > 0.0)) {
    throw DomainError("cut parameters must be positive");
  }
  if (n < 0.0) throw DomainError("accumulation must be non-negative");
  if (n >= n_jam) return 0.0;
  const double q1 = free_flow_speed * n / capacity;
  const double q3 = backward_wave * (n_jam - n) / capacity;
  const double qmin = std::min({q1, 1.0, q3});
  const double sum = std::exp(-(q1 - qmin) / lambda) + std::exp(-(1.0 - qmin) / lambda) +
                     std::exp(-(q3 - qmin) / lambda);
  return std::max(0.0, capacity * (qmin - lambda * std::log(sum)));
}

int slope_sign_changes(const MfdSpec& spec, int probes) {
  const double cap = spec.n_cap();
  std::vector<double> g(static_cast<std::size_t>(probes) + 1);
  for (int k = 0; k <= probes; ++k) g[k] = spec.flow(cap * k / probes);
  const double peak = *std::max_element(g.begin(), g.end());
  const double eps = 1e-12 * std::max(peak, 1e-300);
  int changes = 0;
  int last = 0;
  for (int k = 0; k < probes; ++k) {
    const double d = g[k + 1] - g[k];
    const int sign = d > eps ? 1 : (d < -eps ? -1 : 0);
    if (sign == 0) continue;
    if (last != 0 && sign != last) ++changes;
    last = sign;
  }
  return changes;
}

MfdSpec average_mfds(const std::vector<MfdSpec>& specs, int samples) {
  if (specs.empty()) throw DomainError("cannot average an empty MFD set");
  if (std::all_of(specs.begin(), specs.end(), [&](const MfdSpec& s) { return s == specs[0]; })) {
    return specs[0];
  }
  double cap = 0.0;
  for (const auto& s : specs) cap = std::max(cap, s.n_cap());
  const double spacing = cap / (samples - 1);
  std::vector<double> mean(static_cast<std::size_t>(samples), 0.0);
  for (const auto& s : specs) {
    for (int k = 0; k < samples; ++k) mean[k] += s.flow(spacing * k);
  }
  for (auto& v : mean) v /= static_cast<double>(specs.size());
  return MfdSpec::sampled(spacing, std::move(mean));
}

}  // namespace perimeter
