#include "perimeter/antifragile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <spdlog/spdlog.h>

#include "perimeter/errors.hpp"

namespace perimeter {

namespace {

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

int origin_region(int od) { return od < 2 ? 0 : 1; }

}  // namespace

std::vector<double> encode(EncoderVariant variant, const EncoderScales& scales,
                           const PlantState& now, const PlantState* prev, const PlantState* prev2,
                           const OdFlows& demand) {
  std::vector<double> out;
  out.reserve(variant == EncoderVariant::Baseline ? 8 : 12);
  for (int od = 0; od < 4; ++od) {
    out.push_back(clamp_unit(now.n[od] / scales.n_cap[origin_region(od)]));
  }
  if (variant == EncoderVariant::Baseline) {
    for (int od = 0; od < 4; ++od) out.push_back(clamp_unit(demand[od] / scales.demand));
    return out;
  }
  for (int od = 0; od < 4; ++od) {
    const double d = prev ? now.n[od] - prev->n[od] : 0.0;
    out.push_back(clamp_unit(d / scales.delta));
  }
  for (int od = 0; od < 4; ++od) {
    const double d2 = (prev && prev2) ? now.n[od] - 2.0 * prev->n[od] + prev2->n[od] : 0.0;
    out.push_back(clamp_unit(d2 / scales.delta2));
  }
  return out;
}

void StateEncoder::reset() {
  prev_.reset();
  prev2_.reset();
}

std::vector<double> StateEncoder::observe(const PlantState& state, const OdFlows& demand) {
  auto out = preview(state, demand);
  prev2_ = prev_;
  prev_ = state;
  return out;
}

std::vector<double> StateEncoder::preview(const PlantState& state, const OdFlows& demand) const {
  return encode(variant_, scales_, state, prev_ ? &*prev_ : nullptr, prev2_ ? &*prev2_ : nullptr,
                demand);
}

double mfd_slope(double m_now, double m_prev, double n_now, double n_prev, double guard) {
  const double dn = n_now - n_prev;
  if (std::abs(dn) < guard) return 0.0;
  return (m_now - m_prev) / dn;
}

double mfd_curvature(double h_now, double h_prev) { return h_now - h_prev; }

int direction_flag(double n_now, double n_prev) { return n_now >= n_prev ? 1 : -1; }

double reduction_factor(double n, double n_crit, double n_cap) {
  if (!(n_crit > 0.0 && n_crit < n_cap)) throw DomainError("need 0 < n_crit < n_cap");
  if (n < 0.0 || n > n_cap) {
    spdlog::warn("reduction factor: accumulation {} outside [0, {}], clamped", n, n_cap);
    n = std::clamp(n, 0.0, n_cap);
  }
  constexpr double pi = std::numbers::pi;
  if (n < n_crit) return 0.5 * (1.0 + std::cos(-pi * (n_crit - n) / n_crit));
  return 0.5 * (1.0 + std::cos(-pi * (n - n_crit) / (n_cap - n_crit)));
}

EpsilonTerms epsilon_reward(const EpsilonConfig& cfg, const std::array<RegionSample, 2>& regions) {
  EpsilonTerms out;
  const double norm = cfg.accumulation_scale / cfg.flow_scale;
  for (int i = 0; i < 2; ++i) {
    const auto& r = regions[i];
    const double h = norm * mfd_slope(r.m_now, r.m_prev, r.n_now, r.n_prev, cfg.guard);
    const double dh = r.has_prev_h ? mfd_curvature(h, r.h_prev) : 0.0;
    const double f = reduction_factor(r.n_now, cfg.n_crit[i], cfg.n_cap[i]);
    out.h_term += cfg.omega_h * f * direction_flag(r.n_now, r.n_prev) * h;
    out.dh_term += cfg.omega_dh * f * dh;
    out.h[i] = h;
  }
  return out;
}

void RedundancyReward::reset(const PlantState& initial, const RegionMfds& actual) {
  for (int i = 0; i < 2; ++i) m_prev_[i] = actual.region(i).flow(initial.region(i));
  h_prev_ = {};
  has_prev_h_ = false;
}

RewardTerms RedundancyReward::evaluate(const PlantState& before, const StepOutcome& outcome,
                                       const RegionMfds& actual, double dt) {
  std::array<RegionSample, 2> regions;
  for (int i = 0; i < 2; ++i) {
    const double n_now = outcome.next.region(i);
    regions[i] = RegionSample{n_now,         before.region(i), actual.region(i).flow(n_now),
                              m_prev_[i],    h_prev_[i],       has_prev_h_};
  }
  const EpsilonTerms eps = epsilon_reward(cfg_, regions);
  for (int i = 0; i < 2; ++i) m_prev_[i] = regions[i].m_now;
  h_prev_ = eps.h;
  has_prev_h_ = true;

  RewardTerms terms;
  terms.completion = outcome.intraregional_completed / (dt * cfg_.flow_scale);
  terms.h = eps.h_term;
  terms.dh = eps.dh_term;
  return terms;
}

}  // namespace perimeter
