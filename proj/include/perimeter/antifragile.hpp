#pragma once

#include <array>
#include <optional>
#include <vector>

#include "perimeter/plant.hpp"

namespace perimeter {

enum class EncoderVariant {
  Baseline,     // [n_ij, q_ij], 8 components
  Antifragile,  // [n_ij, dn_ij, d2n_ij], 12 components
};

struct EncoderScales {
  std::array<double, 2> n_cap{10000.0, 20000.0};  // per origin region
  double demand = 10.0;                            // veh/s
  double delta = 500.0;                            // veh per step
  double delta2 = 250.0;                           // veh per step^2
};

/// Encodes one observation. Missing history entries zero the corresponding
/// derivative components. Every output lies in [-1, 1].
std::vector<double> encode(EncoderVariant variant, const EncoderScales& scales,
                           const PlantState& now, const PlantState* prev, const PlantState* prev2,
                           const OdFlows& demand);

/// Stateful encoder holding the last two accumulations of the episode.
class StateEncoder {
 public:
  StateEncoder(EncoderVariant variant, EncoderScales scales)
      : variant_(variant), scales_(scales) {}

  EncoderVariant variant() const { return variant_; }
  int dimension() const { return variant_ == EncoderVariant::Baseline ? 8 : 12; }
  void reset();
  /// Encodes and appends `state` to the history.
  std::vector<double> observe(const PlantState& state, const OdFlows& demand);
  /// Encoding `observe` would return, without touching the history.
  std::vector<double> preview(const PlantState& state, const OdFlows& demand) const;

 private:
  EncoderVariant variant_;
  EncoderScales scales_;
  std::optional<PlantState> prev_;
  std::optional<PlantState> prev2_;
};

// --- redundancy reward ------------------------------------------------------

struct EpsilonConfig {
  double omega_h = 0.2;
  double omega_dh = 0.1;
  std::array<double, 2> n_crit{};
  std::array<double, 2> n_cap{};
  double guard = 1.0;  // veh; secants over smaller |dn| are zero
  /// Completion normalization (veh/s) shared with the completion reward.
  double flow_scale = 1.0;
  /// Accumulation-change normalization (veh per step), as in the encoder.
  double accumulation_scale = 500.0;
};

/// Secant (M(t) - M(t-1)) / (n(t) - n(t-1)); zero when |dn| < guard.
double mfd_slope(double m_now, double m_prev, double n_now, double n_prev, double guard);

/// h(t) - h(t-1).
double mfd_curvature(double h_now, double h_prev);

/// +1 when the accumulation did not decrease, -1 otherwise.
int direction_flag(double n_now, double n_prev);

/// Cosine taper: 0 at an empty network and at n_cap, 1 at n_crit.
/// Out-of-range accumulations are clamped with a warning.
double reduction_factor(double n, double n_crit, double n_cap);

struct RegionSample {
  double n_now = 0.0;
  double n_prev = 0.0;
  double m_now = 0.0;  // veh/s
  double m_prev = 0.0;
  double h_prev = 0.0;  // normalized slope of the previous step
  bool has_prev_h = true;
};

struct EpsilonTerms {
  double h_term = 0.0;
  double dh_term = 0.0;
  std::array<double, 2> h{};  // normalized slopes, fed back as next h_prev
  double total() const { return h_term + dh_term; }
};

/// eps(t) = sum_i f(n_i) [omega_h alpha_i h_i + omega_dh dh_i] with slopes in
/// normalized units (flow / flow_scale over accumulation / accumulation_scale).
EpsilonTerms epsilon_reward(const EpsilonConfig& cfg, const std::array<RegionSample, 2>& regions);

/// Per-step reward: normalized intraregional completion plus the eps terms,
/// computed from realized region totals.
class RedundancyReward final : public RewardModel {
 public:
  explicit RedundancyReward(EpsilonConfig cfg) : cfg_(cfg) {}

  void reset(const PlantState& initial, const RegionMfds& actual) override;
  RewardTerms evaluate(const PlantState& before, const StepOutcome& outcome,
                       const RegionMfds& actual, double dt) override;

  const EpsilonConfig& config() const { return cfg_; }

 private:
  EpsilonConfig cfg_;
  std::array<double, 2> m_prev_{};
  std::array<double, 2> h_prev_{};
  bool has_prev_h_ = false;
};

}  // namespace perimeter
