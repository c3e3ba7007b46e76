#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "perimeter/demand.hpp"
#include "perimeter/mfd.hpp"

namespace perimeter {

/// OD accumulations n_11, n_12, n_21, n_22 in vehicles.
struct PlantState {
  OdFlows n{};

  double region(int i) const { return i == 0 ? n[kOd11] + n[kOd12] : n[kOd21] + n[kOd22]; }
  double total() const { return n[0] + n[1] + n[2] + n[3]; }
  bool operator==(const PlantState&) const = default;
};

/// Gating ratios on the two perimeter directions.
struct ControlAction {
  double u12 = 1.0;
  double u21 = 1.0;
  bool operator==(const ControlAction&) const = default;
};

inline constexpr double kUMin = 0.1;
inline constexpr double kUMax = 0.9;

struct RegionMfds {
  MfdSpec inner;
  MfdSpec outer;
  const MfdSpec& region(int i) const { return i == 0 ? inner : outer; }
};

struct PlantParams {
  double dt = 60.0;
  int substeps = 10;
};

struct StepOutcome {
  PlantState next;
  /// Vehicles leaving each n_ij during the step: completed trips for ii,
  /// accepted perimeter transfers for ij.
  OdFlows moved{};
  double intraregional_completed = 0.0;  // veh, sum of M_11 and M_22 over the step
  double rejected_inflow = 0.0;          // veh refused at a saturated region
  double adjustment = 0.0;               // veh added by non-negativity / removed by cap clamps
};

/// M_ij = (n_ij / n_i) G_i(n_i) in veh/s; an empty region completes nothing.
OdFlows completions(const PlantState& state, const RegionMfds& mfds);

/// Sub-stepped forward Euler over one control step.
StepOutcome advance(const PlantState& state, const ControlAction& action, const OdFlows& demand,
                    const RegionMfds& mfds, const PlantParams& params = {});

PlantState step(const PlantState& state, const ControlAction& action, const OdFlows& demand,
                const RegionMfds& mfds, const PlantParams& params = {});

// --- episode rollout -------------------------------------------------------

struct Observation {
  int step = 0;
  double time = 0.0;
  PlantState state;
  OdFlows demand{};  // realized demand over this step
};

struct RewardTerms {
  double completion = 0.0;
  double h = 0.0;
  double dh = 0.0;
  double shaped() const { return completion + h + dh; }
};

struct StepRecord {
  int step = 0;
  double time = 0.0;
  PlantState state;  // at the start of the step
  ControlAction action;
  OdFlows demand{};
  OdFlows completion{};  // mean flow over the step, veh/s
  RewardTerms reward;
};

struct EpisodeTrace {
  std::string scenario;
  std::string method;
  int replication = 0;
  int episode = 0;
  std::uint64_t seed = 0;
  double dt = 60.0;
  std::vector<StepRecord> steps;
  PlantState final_state;
  std::map<std::string, std::string> metadata;
};

/// Everything needed to roll out one episode.
struct EpisodeScenario {
  std::string id;
  DemandProfile demand;
  RegionMfds mfds;  // realized (possibly disrupted) MFDs
  PlantState initial;
  PlantParams plant;
  double u_min = kUMin;
  double u_max = kUMax;
};

/// Computes per-step reward terms from the realized dynamics.
class RewardModel {
 public:
  virtual ~RewardModel() = default;
  virtual void reset(const PlantState& initial, const RegionMfds& actual) = 0;
  virtual RewardTerms evaluate(const PlantState& before, const StepOutcome& outcome,
                               const RegionMfds& actual, double dt) = 0;
};

struct EpisodeContext {
  const EpisodeScenario& scenario;
  int episode = 0;
  std::uint64_t seed = 0;
};

/// Policy interface driven by run_episode.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  /// False for policies exempt from [u_min, u_max] (no control).
  virtual bool respects_signal_bounds() const { return true; }
  virtual void begin_episode(const EpisodeContext&) {}
  virtual ControlAction act(const Observation& obs) = 0;
  virtual void feedback(const Observation& /*before*/, const ControlAction& /*applied*/,
                        const RewardTerms& /*reward*/, const Observation& /*after*/,
                        bool /*done*/) {}
  /// Called with the finished trace; controllers may annotate its metadata.
  virtual void end_episode(EpisodeTrace& /*trace*/) {}
};

/// Rolls out scenario.demand.steps() control steps from scenario.initial.
/// Out-of-bound actions are clamped with a logged warning.
EpisodeTrace run_episode(Controller& controller, const EpisodeScenario& scenario,
                         std::uint64_t seed, RewardModel* reward = nullptr, int episode = 0);

}  // namespace perimeter
