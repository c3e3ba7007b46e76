#include "perimeter/demand.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "perimeter/errors.hpp"

namespace perimeter {

DemandProfile base_profile(const BaseDemandParams& params) {
  if (params.steps <= 0 || !(params.dt > 0.0) || !(params.sigma_s > 0.0)) {
    throw DomainError("demand profile needs positive steps, dt and sigma");
  }
  for (int od = 0; od < 4; ++od) {
    if (!(params.floor[od] >= 0.0) || !(params.amplitude[od] >= 0.0)) {
      throw DomainError("demand floor and amplitude must be non-negative");
    }
  }
  DemandProfile profile;
  profile.dt = params.dt;
  profile.flows.resize(static_cast<std::size_t>(params.steps));
  for (int k = 0; k < params.steps; ++k) {
    const double t = k * params.dt;
    const double z = (t - params.mean_s) / params.sigma_s;
    const double shape = std::exp(-0.5 * z * z);
    for (int od = 0; od < 4; ++od) {
      profile.flows[k][od] = params.floor[od] + params.amplitude[od] * shape;
    }
  }
  return profile;
}

DemandProfile add_surge(const DemandProfile& base, const SurgeSpec& surge) {
  if (!(surge.magnitude >= 0.0)) throw DomainError("surge magnitude must be non-negative");
  if (!(surge.spread_s > 0.0)) throw DomainError("surge spread must be positive");
  const double horizon = base.dt * static_cast<double>(base.steps());
  if (!(surge.center_s >= 0.0 && surge.center_s <= horizon)) {
    throw DomainError("surge center outside the horizon");
  }
  DemandProfile out = base;
  if (surge.magnitude == 0.0) return out;

  std::vector<double> weight(base.steps());
  double total = 0.0;
  for (std::size_t k = 0; k < base.steps(); ++k) {
    const double z = (static_cast<double>(k) * base.dt - surge.center_s) / surge.spread_s;
    weight[k] = std::exp(-0.5 * z * z);
    total += weight[k];
  }
  // Renormalized after truncation to the horizon: sum(dq * dt) == magnitude.
  const double scale = surge.magnitude / (total * base.dt);
  for (std::size_t k = 0; k < base.steps(); ++k) {
    out.flows[k][surge.target] += scale * weight[k];
  }
  return out;
}

double incremental_magnitude(int episode, int first_disrupted, int last, double max_magnitude) {
  if (last <= first_disrupted) throw DomainError("ramp needs last > first");
  if (episode < first_disrupted || episode > last) {
    throw DomainError("episode " + std::to_string(episode) + " outside ramp [" +
                      std::to_string(first_disrupted) + ", " + std::to_string(last) + "]");
  }
  return max_magnitude * static_cast<double>(episode - first_disrupted) /
         static_cast<double>(last - first_disrupted);
}

DemandProfile averaged_history(std::span<const DemandProfile> profiles) {
  if (profiles.empty()) throw DomainError("averaged_history needs at least one profile");
  DemandProfile out;
  out.dt = profiles.front().dt;
  out.flows.assign(profiles.front().steps(), OdFlows{});
  for (const auto& p : profiles) {
    if (p.steps() != out.steps()) throw DomainError("profiles differ in length");
    for (std::size_t k = 0; k < p.steps(); ++k) {
      for (int od = 0; od < 4; ++od) out.flows[k][od] += p.flows[k][od];
    }
  }
  const double n = static_cast<double>(profiles.size());
  for (auto& row : out.flows) {
    for (auto& v : row) v /= n;
  }
  return out;
}

void DemandHistory::add(const DemandProfile& profile) {
  if (count_ == 0) {
    sum_.assign(profile.steps(), OdFlows{});
  } else if (profile.steps() != sum_.size()) {
    throw DomainError("profiles differ in length");
  }
  for (std::size_t k = 0; k < profile.steps(); ++k) {
    for (int od = 0; od < 4; ++od) sum_[k][od] += profile.flows[k][od];
  }
  ++count_;
}

DemandProfile DemandHistory::model() const {
  if (count_ == 0) return prior_;
  DemandProfile out;
  out.dt = prior_.dt;
  out.flows = sum_;
  const double n = static_cast<double>(count_);
  for (auto& row : out.flows) {
    for (auto& v : row) v /= n;
  }
  return out;
}

void write_demand_csv(std::ostream& out, const DemandProfile& profile) {
  out << "step,q11,q12,q21,q22\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < profile.steps(); ++k) {
    const auto& q = profile.flows[k];
    out << k << ',' << q[0] << ',' << q[1] << ',' << q[2] << ',' << q[3] << '\n';
  }
}

DemandProfile read_demand_csv(std::istream& in, double dt) {
  DemandProfile profile;
  profile.dt = dt;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("step", 0) == 0) continue;
    std::istringstream row(line);
    std::string cell;
    std::array<double, 5> values{};
    for (int c = 0; c < 5; ++c) {
      if (!std::getline(row, cell, ',')) {
        throw ConfigError("demand CSV row has fewer than 5 columns", line_no);
      }
      try {
        values[c] = std::stod(cell);
      } catch (const std::exception&) {
        throw ConfigError("demand CSV cell '" + cell + "' is not a number", line_no);
      }
    }
    if (static_cast<std::size_t>(values[0]) != profile.flows.size()) {
      throw ConfigError("demand CSV steps must be consecutive from 0", line_no);
    }
    OdFlows q{values[1], values[2], values[3], values[4]};
    for (double v : q) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw ConfigError("demand CSV flows must be finite and non-negative", line_no);
      }
    }
    profile.flows.push_back(q);
  }
  return profile;
}

}  // namespace perimeter
