#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace perimeter {

/// OD pair index; the order 1->1, 1->2, 2->1, 2->2 is used everywhere.
enum Od : int { kOd11 = 0, kOd12 = 1, kOd21 = 2, kOd22 = 3 };

using OdFlows = std::array<double, 4>;

/// Per-OD demand in veh/s, held constant over each control step.
struct DemandProfile {
  double dt = 60.0;
  std::vector<OdFlows> flows;

  std::size_t steps() const { return flows.size(); }
  const OdFlows& at(std::size_t step) const { return flows.at(step); }
  bool operator==(const DemandProfile&) const = default;
};

struct BaseDemandParams {
  double mean_s = 1800.0;
  double sigma_s = 900.0;
  OdFlows amplitude{};
  OdFlows floor{};
  int steps = 120;
  double dt = 60.0;
};

struct SurgeSpec {
  double magnitude = 0.0;  // vehicles
  double center_s = 1800.0;
  double spread_s = 300.0;
  Od target = kOd21;
};

/// q_ij(t) = floor_ij + A_ij exp(-(t - mean)^2 / (2 sigma^2)), sampled at the
/// start of each step.
DemandProfile base_profile(const BaseDemandParams& params);

/// Adds a Gaussian bump to the target OD whose discrete integral over the
/// horizon equals the surge magnitude.
DemandProfile add_surge(const DemandProfile& base, const SurgeSpec& surge);

/// Linear ramp M_max (k - first) / (last - first) for first <= k <= last.
double incremental_magnitude(int episode, int first_disrupted, int last, double max_magnitude);

/// Element-wise mean of equal-length profiles.
DemandProfile averaged_history(std::span<const DemandProfile> profiles);

/// Running mean of realized profiles with a prior used while empty.
class DemandHistory {
 public:
  explicit DemandHistory(DemandProfile prior) : prior_(std::move(prior)) {}

  void add(const DemandProfile& profile);
  /// The averaged history, or the prior before any episode completed.
  DemandProfile model() const;
  std::size_t size() const { return count_; }

 private:
  DemandProfile prior_;
  std::vector<OdFlows> sum_;
  std::size_t count_ = 0;
};

/// CSV with header `step,q11,q12,q21,q22`.
void write_demand_csv(std::ostream& out, const DemandProfile& profile);
DemandProfile read_demand_csv(std::istream& in, double dt = 60.0);

}  // namespace perimeter
