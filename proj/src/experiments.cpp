#include "perimeter/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "perimeter/errors.hpp"
#include "perimeter/metrics.hpp"

namespace perimeter {

std::string to_string(DisruptionKind kind) {
  switch (kind) {
    case DisruptionKind::DemandSurge: return "demand";
    case DisruptionKind::SpeedDrop: return "speeddrop";
    case DisruptionKind::CapacityDrop: return "capdrop";
    case DisruptionKind::LambdaLoss: return "lambda";
  }
  return "?";
}

std::string to_string(Schedule schedule) {
  return schedule == Schedule::Proto ? "proto" : "progressive";
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::Base: return "base";
    case Phase::Disrupted: return "disrupted";
    case Phase::TestDisrupted: return "test-disrupted";
    case Phase::TestBase: return "test-base";
    case Phase::Test: return "test";
  }
  return "?";
}

void ScenarioConfig::validate() const {
  if (base_episodes < 1 || disrupted_episodes < 1 || test_episodes < 1) {
    throw DomainError("scenario " + name + ": episode counts must be positive");
  }
  if (replications < 1) throw DomainError("scenario " + name + ": replications must be >= 1");
  const int last = total_episodes();
  for (int k : {base_episodes + 1, last}) {
    const double m = scheduled_magnitude(*this, k);
    const bool drop = kind == DisruptionKind::SpeedDrop || kind == DisruptionKind::CapacityDrop;
    if (drop && !(m >= 0.0 && m < 1.0)) {
      throw DomainError("scenario " + name + ": drop fraction at episode " + std::to_string(k) +
                        " leaves [0, 1)");
    }
    if (kind == DisruptionKind::DemandSurge && m < 0.0) {
      throw DomainError("scenario " + name + ": negative surge");
    }
    if (kind == DisruptionKind::LambdaLoss && !(m > 0.0)) {
      throw DomainError("scenario " + name + ": lambda must stay positive");
    }
  }
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{
      "demand-proto",   "demand-progressive",   "speeddrop-proto", "speeddrop-progressive",
      "capdrop-proto",  "capdrop-progressive",  "lambda-proto",    "lambda-progressive"};
  return names;
}

ScenarioConfig make_scenario(const Config& cfg, const std::string& name) {
  const auto& d = cfg.scenario;
  ScenarioConfig sc;
  sc.name = name;
  sc.base_episodes = d.base_episodes;
  sc.disrupted_episodes = d.disrupted_episodes;
  sc.replications = cfg.study.replications;
  sc.seed = cfg.study.seed;

  const auto dash = name.find('-');
  const std::string kind = name.substr(0, dash);
  const std::string schedule = dash == std::string::npos ? "" : name.substr(dash + 1);
  const bool known = std::find(scenario_names().begin(), scenario_names().end(), name) !=
                     scenario_names().end();
  if (!known) {
    std::string valid;
    for (const auto& n : scenario_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown scenario '" + name + "'; valid scenarios: " + valid);
  }
  sc.schedule = schedule == "proto" ? Schedule::Proto : Schedule::Progressive;
  sc.test_episodes =
      sc.schedule == Schedule::Proto ? d.proto_test_episodes : d.progressive_test_episodes;
  sc.ramp_start_episode = d.base_episodes;

  if (kind == "demand") {
    sc.kind = DisruptionKind::DemandSurge;
    sc.magnitude = sc.schedule == Schedule::Proto ? d.proto_surge : 0.0;
    sc.ramp_end = d.ramp_surge_max;
  } else if (kind == "speeddrop" || kind == "capdrop") {
    sc.kind = kind == "speeddrop" ? DisruptionKind::SpeedDrop : DisruptionKind::CapacityDrop;
    sc.magnitude = sc.schedule == Schedule::Proto ? d.proto_drop : 0.0;
    sc.ramp_end = d.ramp_drop_max;
  } else {
    sc.kind = DisruptionKind::LambdaLoss;
    if (sc.schedule == Schedule::Proto) {
      sc.magnitude = d.proto_lambda;
    } else {
      // The lambda ramp starts at a disruptive value on the first disrupted
      // episode rather than at zero on the last base episode.
      sc.magnitude = d.ramp_lambda_start;
      sc.ramp_start_episode = d.base_episodes + 1;
    }
    sc.ramp_end = d.ramp_lambda_end;
  }
  try {
    sc.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return sc;
}

double scheduled_magnitude(const ScenarioConfig& sc, int episode) {
  if (sc.schedule == Schedule::Proto) return sc.magnitude;
  const int e0 = sc.ramp_start_episode;
  const int e1 = sc.base_episodes + sc.disrupted_episodes;
  if (sc.kind == DisruptionKind::DemandSurge && sc.magnitude == 0.0 && episode >= e0 &&
      episode <= e1) {
    return incremental_magnitude(episode, e0, e1, sc.ramp_end);
  }
  return sc.magnitude + (sc.ramp_end - sc.magnitude) * (episode - e0) / double(e1 - e0);
}

std::vector<EpisodePlan> episode_plan(const ScenarioConfig& sc) {
  std::vector<EpisodePlan> plan;
  int k = 0;
  for (int i = 0; i < sc.base_episodes; ++i) plan.push_back({++k, Phase::Base, 0.0, false, true});
  for (int i = 0; i < sc.disrupted_episodes; ++i) {
    ++k;
    plan.push_back({k, Phase::Disrupted, scheduled_magnitude(sc, k), true, true});
  }
  for (int i = 0; i < sc.test_episodes; ++i) {
    ++k;
    if (sc.schedule == Schedule::Progressive) {
      plan.push_back({k, Phase::Test, scheduled_magnitude(sc, k), true, false});
    } else if (i % 2 == 0) {
      plan.push_back({k, Phase::TestDisrupted, sc.magnitude, true, false});
    } else {
      plan.push_back({k, Phase::TestBase, 0.0, false, false});
    }
  }
  return plan;
}

EpisodeScenario build_episode(const Config& cfg, const ScenarioConfig& sc, const EpisodePlan& plan) {
  EpisodeScenario ep{sc.name + "/" + std::to_string(plan.episode),
                     cfg.base_demand(),
                     cfg.base_mfds(),
                     cfg.demand.initial,
                     cfg.plant_params(),
                     cfg.plant.u_min,
                     cfg.plant.u_max};
  if (!plan.disrupted) return ep;

  const bool both = cfg.mfd.disrupt_both_regions;
  const double m = plan.magnitude;
  switch (sc.kind) {
    case DisruptionKind::DemandSurge:
      ep.demand = add_surge(ep.demand, SurgeSpec{m, cfg.demand.surge_center_s,
                                                 cfg.demand.surge_spread_s,
                                                 cfg.demand.surge_target});
      break;
    case DisruptionKind::SpeedDrop:
      ep.mfds.inner = apply_speed_drop(ep.mfds.inner, m);
      if (both) ep.mfds.outer = apply_speed_drop(ep.mfds.outer, m);
      break;
    case DisruptionKind::CapacityDrop:
      ep.mfds.inner = apply_capacity_drop(ep.mfds.inner, m);
      if (both) ep.mfds.outer = apply_capacity_drop(ep.mfds.outer, m);
      break;
    case DisruptionKind::LambdaLoss: {
      const auto& f = cfg.mfd;
      const MfdSpec cuts = MfdSpec::smoothed_cuts(f.cuts_free_flow_speed, f.cuts_capacity,
                                                  f.cuts_backward_wave, f.cuts_jam, m);
      ep.mfds.inner = cuts;
      if (both) ep.mfds.outer = cuts.rescaled(f.outer_accumulation_scale, f.outer_flow_scale);
      break;
    }
  }
  return ep;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t scenario_seed(std::uint64_t study_seed, int episode) {
  return splitmix64(splitmix64(study_seed) ^ static_cast<std::uint64_t>(episode));
}

std::uint64_t agent_seed(std::uint64_t replication_seed, const std::string& method) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : method) h = (h ^ c) * 1099511628211ULL;
  return splitmix64(replication_seed ^ splitmix64(h));
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"no-control", "mpc", "rl-baseline",
                                              "rl-antifragile"};
  return names;
}

bool seed_independent(const std::string& method) {
  return method == "no-control" || method == "mpc";
}

std::unique_ptr<Controller> make_controller(const Config& cfg, const std::string& method,
                                            std::uint64_t seed) {
  if (method == "no-control") return std::make_unique<NoControl>(cfg.plant.no_control_u);
  if (method == "mpc") {
    return std::make_unique<MpcController>(cfg.mpc_settings(), cfg.base_demand(),
                                           cfg.base_mfds());
  }
  if (method == "rl-baseline" || method == "rl-antifragile") {
    AgentSpec spec;
    spec.name = method;
    spec.variant =
        method == "rl-baseline" ? EncoderVariant::Baseline : EncoderVariant::Antifragile;
    spec.shaped_reward = method == "rl-antifragile";
    spec.scales = cfg.encoder_scales();
    spec.hp = cfg.ddpg;
    return std::make_unique<DdpgAgent>(spec, seed);
  }
  std::string valid;
  for (const auto& n : method_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown method '" + method + "'; valid methods: " + valid);
}

namespace {

double metadata_number(const EpisodeTrace& trace, const std::string& key) {
  const auto it = trace.metadata.find(key);
  if (it == trace.metadata.end()) return 0.0;
  return std::stod(it->second);
}

}  // namespace

ReplicationResult run_replication(const Config& cfg, const ScenarioConfig& sc,
                                  const std::string& method, int replication,
                                  const RunHooks& hooks, int max_episodes) {
  ReplicationResult result;
  result.replication = replication;
  result.seed = sc.seed + static_cast<std::uint64_t>(replication);
  try {
    auto controller = make_controller(cfg, method, agent_seed(result.seed, method));
    auto* agent = dynamic_cast<DdpgAgent*>(controller.get());
    RedundancyReward reward(cfg.epsilon_config());
    for (const EpisodePlan& plan : episode_plan(sc)) {
      if (max_episodes >= 0 && plan.episode > max_episodes) break;
      const EpisodeScenario scenario = build_episode(cfg, sc, plan);
      if (agent) agent->set_training(plan.learning);
      EpisodeTrace trace = run_episode(*controller, scenario, scenario_seed(sc.seed, plan.episode),
                                       &reward, plan.episode);
      trace.replication = replication;
      trace.metadata["phase"] = to_string(plan.phase);
      EpisodeSummary s;
      s.episode = plan.episode;
      s.phase = plan.phase;
      s.magnitude = plan.magnitude;
      s.tts = tts(trace);
      if (agent) {
        s.cumulative_reward = metadata_number(trace, "cumulative_reward");
        s.noise_scale = metadata_number(trace, "noise_scale");
      } else {
        for (const auto& rec : trace.steps) s.cumulative_reward += rec.reward.completion;
      }
      result.episodes.push_back(s);
      if (hooks.on_episode) hooks.on_episode(method, replication, trace, s);
    }
    result.ok = true;
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
    spdlog::error("{} replication {} failed: {}", method, replication, e.what());
  }
  return result;
}

int StudyResult::successes() const {
  return static_cast<int>(
      std::count_if(replications.begin(), replications.end(), [](const auto& r) { return r.ok; }));
}

StudyResult replicate(const Config& cfg, const ScenarioConfig& sc, const std::string& method,
                      int jobs, const RunHooks& hooks) {
  const int reps = sc.replications;
  if (reps < 1) throw DomainError("replicate needs R >= 1");
  StudyResult study;
  study.scenario = sc.name;
  study.method = method;
  study.plan = episode_plan(sc);
  study.replications.resize(reps);

  const bool shared = seed_independent(method);
  const int runs = shared ? 1 : reps;
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min(jobs, runs);

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < runs; r = next++) {
      study.replications[r] = run_replication(cfg, sc, method, r, hooks);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (int r = 1; shared && r < reps; ++r) {
    study.replications[r] = study.replications[0];
    study.replications[r].replication = r;
    study.replications[r].seed = sc.seed + static_cast<std::uint64_t>(r);
  }

  const int ok = study.successes();
  if (2 * ok < reps) {
    std::string first;
    for (const auto& r : study.replications) {
      if (!r.ok) {
        first = r.error;
        break;
      }
    }
    throw StudyError(method + " on " + sc.name + ": only " + std::to_string(ok) + " of " +
                     std::to_string(reps) + " replications succeeded; first failure: " + first);
  }

  const std::size_t n = study.plan.size();
  study.mean_tts.assign(n, 0.0);
  study.std_tts.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> v;
    for (const auto& r : study.replications) {
      if (r.ok) v.push_back(r.episodes[k].tts);
    }
    // Shifted by the first value so identical replications give exactly zero spread.
    double shift = 0.0;
    for (double x : v) shift += x - v.front();
    const double mean = v.front() + shift / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    study.mean_tts[k] = mean;
    study.std_tts[k] = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  }
  return study;
}

StudyResult run_proto(const Config& cfg, const ScenarioConfig& sc, const std::string& method,
                      int jobs, const RunHooks& hooks) {
  if (sc.schedule != Schedule::Proto) throw DomainError(sc.name + " is not a proto scenario");
  return replicate(cfg, sc, method, jobs, hooks);
}

StudyResult run_progressive(const Config& cfg, const ScenarioConfig& sc,
                            const std::string& method, int jobs, const RunHooks& hooks) {
  if (sc.schedule != Schedule::Progressive) {
    throw DomainError(sc.name + " is not a progressive scenario");
  }
  return replicate(cfg, sc, method, jobs, hooks);
}

namespace {

std::string num(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace

void write_curves_csv(std::ostream& out, const std::vector<StudyResult>& results) {
  out << "study,method,phase,episode,mean_tts_vehs,std_tts_vehs\n";
  for (const auto& r : results) {
    for (std::size_t k = 0; k < r.plan.size(); ++k) {
      out << r.scenario << ',' << r.method << ',' << to_string(r.plan[k].phase) << ','
          << r.plan[k].episode << ',' << num(r.mean_tts[k]) << ',' << num(r.std_tts[k]) << '\n';
    }
  }
}

std::vector<CurveRow> read_curves_csv(std::istream& in) {
  std::vector<CurveRow> rows;
  std::string line;
  int n = 0;
  if (!std::getline(in, line) || line.rfind("study,method,phase,episode", 0) != 0) {
    throw ConfigError("curves.csv: missing header", 1);
  }
  n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw ConfigError("curves.csv: expected 6 columns", n);
    try {
      rows.push_back(CurveRow{cells[0], cells[1], cells[2], std::stoi(cells[3]),
                              std::stod(cells[4]), std::stod(cells[5])});
    } catch (const std::exception&) {
      throw ConfigError("curves.csv: malformed number", n);
    }
  }
  return rows;
}

}  // namespace perimeter
