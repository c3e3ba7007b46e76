#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "perimeter/controllers.hpp"
#include "perimeter/ddpg.hpp"

namespace perimeter {

struct MfdConfig {
  // Inner cubic coefficients (veh/h) and jam accumulation; required keys.
  double inner_a = 0.0;
  double inner_b = 0.0;
  double inner_c = 0.0;
  double inner_jam = 0.0;
  double outer_accumulation_scale = 2.0;
  double outer_flow_scale = 1.5;
  double cuts_free_flow_speed = 2.6e-3;
  double cuts_capacity = 6.4;
  double cuts_backward_wave = 1.0e-3;
  double cuts_jam = 10000.0;
  bool disrupt_both_regions = false;
};

struct DemandConfig {
  BaseDemandParams base{1800.0, 900.0, {4.0, 1.2, 4.2, 2.0}, {0.1, 0.1, 0.1, 0.1}, 120, 60.0};
  double surge_center_s = 1800.0;
  double surge_spread_s = 300.0;
  Od surge_target = kOd21;
  PlantState initial{{600.0, 1300.0, 300.0, 2400.0}};
};

struct PlantConfig {
  int substeps = 10;
  double u_min = kUMin;
  double u_max = kUMax;
  double no_control_u = 1.0;
};

struct MpcConfigFile {
  int horizon = 30;
  int block = 5;
  int iterations = 40;
  int restarts = 4;
  double initial_step = 0.25;
  double min_step = 1e-3;
  double fd_step = 1e-4;
  int model_substeps = 2;
};

struct EncoderConfig {
  double demand_scale = 10.0;
  double delta_scale = 500.0;
  double delta2_scale = 250.0;
};

struct AntifragileConfig {
  double omega_h = 0.2;
  double omega_dh = 0.1;
  double guard = 1.0;
};

struct ScenarioDefaults {
  std::string name = "demand-proto";
  int base_episodes = 50;
  int disrupted_episodes = 50;
  int proto_test_episodes = 2;
  int progressive_test_episodes = 20;
  double proto_surge = 2500.0;
  double proto_drop = 0.125;
  double proto_lambda = 0.095;
  double ramp_surge_max = 5000.0;
  double ramp_drop_max = 0.25;
  double ramp_lambda_start = 0.07;
  double ramp_lambda_end = 0.12;
};

struct StudyConfig {
  int replications = 15;
  std::uint64_t seed = 20230501;
  int jobs = 0;  // 0: available parallelism
  std::vector<std::string> methods{"no-control", "mpc", "rl-baseline", "rl-antifragile"};
};

struct Config {
  MfdConfig mfd;
  DemandConfig demand;
  PlantConfig plant;
  MpcConfigFile mpc;
  Hyperparams ddpg;
  EncoderConfig encoder;
  AntifragileConfig antifragile;
  ScenarioDefaults scenario;
  StudyConfig study;

  RegionMfds base_mfds() const;
  DemandProfile base_demand() const;
  PlantParams plant_params() const { return PlantParams{demand.base.dt, plant.substeps}; }
  /// Sum of the two undisrupted region maxima; normalizes completion rewards.
  double reward_flow_scale() const;
  EpsilonConfig epsilon_config() const;
  EncoderScales encoder_scales() const;
  MpcController::Settings mpc_settings() const;

  /// Range and calibration checks; throws ConfigError naming the key.
  void validate() const;
};

/// Parses the TOML subset used by the shipped configs: [section] headers,
/// `key = value` with numbers, booleans, double-quoted strings and flat
/// arrays, `#` comments. Errors carry the offending line number.
Config parse_config(std::istream& in);
Config load_config(const std::string& path);

/// Every key with its effective value; parse_config(snapshot) reproduces
/// the configuration exactly.
std::string config_snapshot(const Config& cfg);

}  // namespace perimeter
