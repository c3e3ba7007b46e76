#pragma once

#include <memory>
#include <variant>
#include <vector>

namespace perimeter {

/// G(n) = (a n^3 + b n^2 + c n) / 3600 veh/s with coefficients in veh/h.
///
/// When the cubic has no positive root below `n_jam`, the congested branch is
/// tapered by a quadratic that vanishes (with zero slope) at the critical
/// accumulation and cancels G exactly at `n_jam`. The result is C1, keeps the
/// critical accumulation and the maximum flow, and reaches zero at `n_jam`.
struct CubicMfd {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double n_jam = 0.0;
};

/// Method-of-cuts MFD smoothed by a log-sum-exp soft minimum with
/// infrastructure potential `lambda`. Cuts are normalized by capacity.
struct SmoothedCutsMfd {
  double free_flow_speed = 0.0;  // veh/s per veh
  double capacity = 0.0;         // veh/s
  double backward_wave = 0.0;    // veh/s per veh
  double n_jam = 0.0;            // veh
  double lambda = 0.0;
};

/// Piecewise-linear MFD sampled on a uniform accumulation grid starting at 0.
/// Used for averaged MFD models; last sample is taken as the jam accumulation.
struct SampledMfd {
  double spacing = 0.0;
  std::shared_ptr<const std::vector<double>> flow;
};

/// One region's macroscopic fundamental diagram.
///
/// The stored form is evaluated on a rescaled axis:
/// G(n) = flow_scale * base(n / accumulation_scale). Disruptions and the outer
/// region default are expressed through these two factors. Immutable after
/// construction.
class MfdSpec {
 public:
  using Form = std::variant<CubicMfd, SmoothedCutsMfd, SampledMfd>;

  explicit MfdSpec(Form form, double accumulation_scale = 1.0, double flow_scale = 1.0);

  static MfdSpec cubic(double a, double b, double c, double n_jam);
  static MfdSpec smoothed_cuts(double free_flow_speed, double capacity, double backward_wave,
                               double n_jam, double lambda);
  static MfdSpec sampled(double spacing, std::vector<double> flow);

  /// Completion flow in veh/s. Zero beyond n_cap; throws DomainError for n < 0.
  double flow(double n) const;
  /// Analytic slope dG/dn where available, central difference otherwise.
  double slope(double n) const;

  double n_crit() const { return n_crit_; }
  double n_cap() const { return n_cap_; }
  double max_flow() const { return max_flow_; }

  double accumulation_scale() const { return accumulation_scale_; }
  double flow_scale() const { return flow_scale_; }
  const Form& form() const { return form_; }

  /// Copy with both axis factors multiplied.
  MfdSpec rescaled(double accumulation_factor, double flow_factor) const;

  bool operator==(const MfdSpec& other) const;

 private:
  double base_flow(double x) const;
  double base_cap() const;

  Form form_;
  double accumulation_scale_;
  double flow_scale_;
  // Cubic derived values, unscaled axis.
  double cubic_crit_ = 0.0;
  double cubic_cap_ = 0.0;
  double taper_ = 0.0;
  double n_cap_ = 0.0;
  double n_crit_ = 0.0;
  double max_flow_ = 0.0;
};

/// G(n) clamped at zero; negative n is a domain error.
double completion_rate(const MfdSpec& spec, double n);

/// Argmax of G on [0, n_cap] to 0.1 veh. Throws InvariantError when G is not
/// unimodal.
double critical_accumulation(const MfdSpec& spec);

/// Golden-section maximizer of a unimodal function on [lo, hi].
template <typename F>
double golden_section_argmax(F&& f, double lo, double hi, double tol);

/// G'(n) = (1 - delta) G(n): free-flow speed drops, n_crit and n_cap stay.
MfdSpec apply_speed_drop(const MfdSpec& spec, double delta);

/// G'(n) = (1 - delta) G(n / (1 - delta)): both axes contract, free-flow
/// slope is kept.
MfdSpec apply_capacity_drop(const MfdSpec& spec, double delta);

/// Capacity-normalized soft minimum of the free-flow, capacity and
/// backward-wave cuts, in veh/s, clamped at zero.
double smoothed_cuts_flow(double free_flow_speed, double capacity, double backward_wave,
                          double n_jam, double lambda, double n);

/// Number of sign changes of the forward difference of G over `probes`
/// evenly spaced points on [0, n_cap]. A unimodal MFD yields 1.
int slope_sign_changes(const MfdSpec& spec, int probes = 1000);

/// Pointwise mean of a set of MFDs, tabulated on `samples` grid points.
MfdSpec average_mfds(const std::vector<MfdSpec>& specs, int samples = 2001);

// ---------------------------------------------------------------------------

template <typename F>
double golden_section_argmax(F&& f, double lo, double hi, double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace perimeter
