#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "perimeter/plant.hpp"

namespace perimeter {

ControlAction no_control_action(double u = 1.0);

/// Constant fully-open (or configured) gating. Exempt from signal bounds.
class NoControl final : public Controller {
 public:
  explicit NoControl(double u = 1.0) : u_(u) {}
  std::string name() const override { return "no-control"; }
  bool respects_signal_bounds() const override { return false; }
  ControlAction act(const Observation&) override { return no_control_action(u_); }

 private:
  double u_;
};

struct MpcConfig {
  DemandProfile demand_model;
  RegionMfds mfd_model;
  PlantParams plant{};
  int horizon = 30;
  /// Consecutive steps sharing one decision variable pair (move blocking).
  int block = 1;
  int iterations = 40;
  int restarts = 4;
  double initial_step = 0.25;
  double min_step = 1e-3;
  double fd_step = 1e-4;
  double u_min = kUMin;
  double u_max = kUMax;
  std::uint64_t seed = 0;
};

struct MpcDiagnostics {
  std::vector<double> start_objectives;
  std::vector<double> restart_objectives;
  std::vector<int> restart_iterations;
  double best_objective = 0.0;
  std::vector<double> best_sequence;  // interleaved (u12, u21) per step
};

/// Vehicles completing intraregional trips over the horizon starting at step
/// `t` under the control sequence `u` (interleaved u12, u21 per step).
double mpc_objective(const PlantState& state, int t, std::span<const double> u,
                     const MpcConfig& cfg);

/// Receding-horizon solve: multi-start projected gradient ascent with
/// finite-difference gradients; returns the first action of the best sequence.
/// Restart order: all-high, all-low, mid, then seeded random.
ControlAction mpc_solve(const PlantState& state, int t, const MpcConfig& cfg,
                        MpcDiagnostics* diag = nullptr);

/// Number of steps the horizon covers from `t` (clipped to the model length).
int mpc_horizon_steps(int t, const MpcConfig& cfg);

/// MPC whose demand and MFD models are the running averages of every episode
/// seen so far (the base scenario before the first one).
class MpcController final : public Controller {
 public:
  struct Settings {
    int horizon = 30;
    int block = 1;
    int iterations = 40;
    int restarts = 4;
    double initial_step = 0.25;
    double min_step = 1e-3;
    double fd_step = 1e-4;
    int model_substeps = 10;
    /// Use the realized demand/MFDs instead of history (perfect knowledge).
    bool oracle = false;
  };

  MpcController(Settings settings, DemandProfile prior_demand, RegionMfds prior_mfds);

  std::string name() const override { return "mpc"; }
  void begin_episode(const EpisodeContext& ctx) override;
  ControlAction act(const Observation& obs) override;
  void end_episode(EpisodeTrace& trace) override;

  std::size_t history_size() const { return demand_history_.size(); }
  const MpcConfig& current_config() const { return *cfg_; }

 private:
  Settings settings_;
  DemandHistory demand_history_;
  RegionMfds prior_mfds_;
  std::vector<MfdSpec> inner_history_;
  std::vector<MfdSpec> outer_history_;
  std::optional<MpcConfig> cfg_;
  std::optional<RegionMfds> realized_mfds_;
  std::vector<double> objectives_;
  std::vector<int> iterations_;
};

}  // namespace perimeter
