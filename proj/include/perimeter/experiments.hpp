#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "perimeter/config.hpp"

namespace perimeter {

enum class DisruptionKind { DemandSurge, SpeedDrop, CapacityDrop, LambdaLoss };
enum class Schedule { Proto, Progressive };
enum class Phase { Base, Disrupted, TestDisrupted, TestBase, Test };

std::string to_string(DisruptionKind kind);
std::string to_string(Schedule schedule);
std::string to_string(Phase phase);

struct ScenarioConfig {
  std::string name;
  DisruptionKind kind = DisruptionKind::DemandSurge;
  Schedule schedule = Schedule::Proto;
  int base_episodes = 50;
  int disrupted_episodes = 50;
  int test_episodes = 2;
  /// Proto: constant magnitude. Progressive: value at `ramp_start_episode`.
  double magnitude = 0.0;
  int ramp_start_episode = 50;
  double ramp_end = 0.0;  // value at the last disrupted episode
  int replications = 15;
  std::uint64_t seed = 0;

  int total_episodes() const { return base_episodes + disrupted_episodes + test_episodes; }
  void validate() const;
};

/// demand-proto, demand-progressive, speeddrop-*, capdrop-*, lambda-*.
const std::vector<std::string>& scenario_names();

/// Builds the named scenario from the config defaults; ConfigError lists the
/// valid names for an unknown one.
ScenarioConfig make_scenario(const Config& cfg, const std::string& name);

struct EpisodePlan {
  int episode = 1;  // 1-based
  Phase phase = Phase::Base;
  double magnitude = 0.0;  // surge veh, drop fraction or lambda; 0 for base
  bool disrupted = false;
  bool learning = true;
};

/// Magnitude of the disruption schedule at `episode` (linear, extended past
/// the last disrupted episode for the progressive test phase).
double scheduled_magnitude(const ScenarioConfig& sc, int episode);

std::vector<EpisodePlan> episode_plan(const ScenarioConfig& sc);

/// Realized demand and MFDs of one planned episode.
EpisodeScenario build_episode(const Config& cfg, const ScenarioConfig& sc, const EpisodePlan& plan);

/// Scenario seed of an episode: depends on the study seed and the episode
/// only, so every method and replication faces the same realization.
std::uint64_t scenario_seed(std::uint64_t study_seed, int episode);
/// Agent seed of (replication seed, method).
std::uint64_t agent_seed(std::uint64_t replication_seed, const std::string& method);

const std::vector<std::string>& method_names();
/// Methods whose traces do not depend on the replication seed.
bool seed_independent(const std::string& method);

std::unique_ptr<Controller> make_controller(const Config& cfg, const std::string& method,
                                            std::uint64_t agent_seed);

struct EpisodeSummary {
  int episode = 0;
  Phase phase = Phase::Base;
  double magnitude = 0.0;
  double tts = 0.0;
  double cumulative_reward = 0.0;
  double noise_scale = 0.0;
};

struct ReplicationResult {
  int replication = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<EpisodeSummary> episodes;
};

/// Per-episode hooks, called from the replication's worker thread.
struct RunHooks {
  std::function<void(const std::string& method, int replication, const EpisodeTrace&,
                     const EpisodeSummary&)>
      on_episode;
};

ReplicationResult run_replication(const Config& cfg, const ScenarioConfig& sc,
                                  const std::string& method, int replication,
                                  const RunHooks& hooks = {}, int max_episodes = -1);

struct StudyResult {
  std::string scenario;
  std::string method;
  std::vector<EpisodePlan> plan;
  std::vector<ReplicationResult> replications;
  std::vector<double> mean_tts;
  std::vector<double> std_tts;  // sample standard deviation; 0 for R = 1
  int successes() const;
};

/// Runs R replications (seeds seed+0 .. seed+R-1) on up to `jobs` threads
/// and aggregates. Seed-independent methods are simulated once and the
/// result is shared by every replication. Throws StudyError when fewer than
/// R/2 replications succeed.
StudyResult replicate(const Config& cfg, const ScenarioConfig& sc, const std::string& method,
                      int jobs = 0, const RunHooks& hooks = {});

StudyResult run_proto(const Config& cfg, const ScenarioConfig& sc, const std::string& method,
                      int jobs = 0, const RunHooks& hooks = {});
StudyResult run_progressive(const Config& cfg, const ScenarioConfig& sc,
                            const std::string& method, int jobs = 0, const RunHooks& hooks = {});

/// curves.csv: study,method,phase,episode,mean_tts_vehs,std_tts_vehs
void write_curves_csv(std::ostream& out, const std::vector<StudyResult>& results);

struct CurveRow {
  std::string study;
  std::string method;
  std::string phase;
  int episode = 0;
  double mean_tts = 0.0;
  double std_tts = 0.0;
};
std::vector<CurveRow> read_curves_csv(std::istream& in);

}  // namespace perimeter
