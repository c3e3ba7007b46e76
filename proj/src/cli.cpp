#include "perimeter/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "perimeter/config.hpp"
#include "perimeter/errors.hpp"
#include "perimeter/experiments.hpp"
#include "perimeter/metrics.hpp"
#include "perimeter/svg.hpp"
#include "perimeter/trace_io.hpp"

namespace fs = std::filesystem;

namespace perimeter {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split_methods(const std::string& arg, const Config& cfg) {
  if (arg.empty()) return cfg.study.methods;
  if (arg == "all") return method_names();
  std::vector<std::string> out;
  std::stringstream ss(arg);
  std::string m;
  while (std::getline(ss, m, ',')) {
    if (std::find(method_names().begin(), method_names().end(), m) == method_names().end()) {
      std::string valid;
      for (const auto& n : method_names()) valid += (valid.empty() ? "" : ", ") + n;
      throw UsageError("unknown method '" + m + "'; valid methods: " + valid);
    }
    out.push_back(m);
  }
  if (out.empty()) throw UsageError("--methods is empty");
  return out;
}

struct SimulateArgs {
  std::string config;
  std::string method;
  std::string scenario;
  int episodes = -1;
  std::int64_t seed = -1;
  std::string out = "out";
  bool svg = false;
};

int cmd_simulate(const SimulateArgs& a) {
  Config cfg = load_config(a.config);
  if (!a.scenario.empty()) cfg.scenario.name = a.scenario;
  if (a.seed >= 0) cfg.study.seed = static_cast<std::uint64_t>(a.seed);
  if (a.method == "all" || split_methods(a.method, cfg).size() != 1) {
    throw UsageError("--method takes exactly one method");
  }
  const ScenarioConfig sc = make_scenario(cfg, cfg.scenario.name);
  if (a.episodes == 0 || a.episodes > sc.total_episodes()) {
    throw UsageError("--episodes must lie in [1, " + std::to_string(sc.total_episodes()) + "]");
  }

  const fs::path out(a.out);
  fs::create_directories(out);
  std::ofstream traces(out / "traces.jsonl", std::ios::trunc);
  std::ostringstream summary;
  write_summary_header(summary);
  RunHooks hooks;
  hooks.on_episode = [&](const std::string& method, int rep, const EpisodeTrace& trace,
                         const EpisodeSummary& s) {
    write_trace_jsonl(traces, trace);
    write_summary_row(summary, method, rep, s);
    spdlog::info("{} episode {} ({}): TTS {:.6g} veh*s", method, s.episode, to_string(s.phase),
                 s.tts);
  };
  const ReplicationResult r = run_replication(cfg, sc, a.method, 0, hooks, a.episodes);
  write_file(out / "summary.csv", summary.str());
  write_file(out / "config.snapshot", config_snapshot(cfg));
  if (a.svg && !r.episodes.empty()) {
    Series s{a.method, {}, {}};
    for (const auto& e : r.episodes) {
      s.x.push_back(e.episode);
      s.y.push_back(e.tts);
    }
    write_file(out / "tts.svg", line_chart_svg({s}, sc.name, "episode", "TTS (veh*s)"));
  }
  if (!r.ok) {
    spdlog::error("simulation failed: {}", r.error);
    return kExitRuntime;
  }
  return kExitOk;
}

struct StudyArgs {
  std::string config;
  std::string scenario;
  std::string methods;
  int reps = 0;
  int jobs = -1;
  std::int64_t seed = -1;
  std::string out = "study";
  bool traces = false;
  bool svg = false;
};

int cmd_study(const StudyArgs& a) {
  Config cfg = load_config(a.config);
  if (!a.scenario.empty()) cfg.scenario.name = a.scenario;
  if (a.reps > 0) cfg.study.replications = a.reps;
  if (a.seed >= 0) cfg.study.seed = static_cast<std::uint64_t>(a.seed);
  if (a.jobs >= 0) cfg.study.jobs = a.jobs;
  cfg.study.methods = split_methods(a.methods, cfg);
  const ScenarioConfig sc = make_scenario(cfg, cfg.scenario.name);

  const fs::path out(a.out);
  fs::create_directories(out);
  write_file(out / "config.snapshot", config_snapshot(cfg));

  FileSink logs(out / "logs");
  FileSink traces(out / "traces");
  RunHooks hooks;
  hooks.on_episode = [&](const std::string& method, int rep, const EpisodeTrace& trace,
                         const EpisodeSummary& s) {
    const std::string file = method + "_rep" + std::to_string(rep) + ".jsonl";
    auto& log = logs.stream(file);
    write_training_log_line(log, trace, s);
    log.flush();
    if (a.traces) write_trace_jsonl(traces.stream(file), trace);
    spdlog::debug("{} rep {} episode {}: TTS {:.6g}", method, rep, s.episode, s.tts);
  };

  std::vector<StudyResult> results;
  std::ostringstream summary;
  write_summary_header(summary);
  bool failed = false;
  for (const auto& method : cfg.study.methods) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      StudyResult r = replicate(cfg, sc, method, cfg.study.jobs, hooks);
      for (const auto& rep : r.replications) {
        if (!rep.ok) spdlog::warn("{} replication {} failed: {}", method, rep.replication, rep.error);
        for (const auto& e : rep.episodes) write_summary_row(summary, method, rep.replication, e);
      }
      results.push_back(std::move(r));
    } catch (const StudyError& e) {
      spdlog::error("{}", e.what());
      failed = true;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    spdlog::info("{} on {}: {} replications in {:.1f} s", method, sc.name, sc.replications, secs);
  }

  std::ostringstream curves;
  write_curves_csv(curves, results);
  write_file(out / "curves.csv", curves.str());
  write_file(out / "summary.csv", summary.str());
  if (a.svg) {
    std::vector<Series> series;
    for (const auto& r : results) {
      Series s{r.method, {}, r.mean_tts};
      for (const auto& p : r.plan) s.x.push_back(p.episode);
      series.push_back(std::move(s));
    }
    write_file(out / "curves.svg", line_chart_svg(series, sc.name, "episode", "mean TTS (veh*s)"));
  }
  return failed ? kExitRuntime : kExitOk;
}

struct ReportArgs {
  std::string study;
  std::string baseline = "rl-baseline";
  std::string out;
  bool svg = false;
};

int cmd_report(const ReportArgs& a) {
  const fs::path dir(a.study);
  const Config cfg = load_config((dir / "config.snapshot").string());
  std::ifstream in(dir / "curves.csv");
  if (!in) throw ConfigError("cannot open " + (dir / "curves.csv").string());
  const auto rows = read_curves_csv(in);
  if (rows.empty()) throw ConfigError("curves.csv has no rows");
  const ScenarioConfig sc = make_scenario(cfg, rows.front().study);
  std::map<int, double> magnitude;
  for (const auto& p : episode_plan(sc)) {
    if (p.phase == Phase::Disrupted) magnitude[p.episode] = p.magnitude;
  }

  std::vector<MethodCurve> curves;
  for (const auto& row : rows) {
    if (row.phase != to_string(Phase::Disrupted)) continue;
    auto it = std::find_if(curves.begin(), curves.end(),
                           [&](const MethodCurve& c) { return c.method == row.method; });
    if (it == curves.end()) {
      curves.push_back({row.method, {}, {}});
      it = std::prev(curves.end());
    }
    it->magnitude.push_back(magnitude.at(row.episode));
    it->tts.push_back(row.mean_tts);
  }
  if (std::none_of(curves.begin(), curves.end(),
                   [&](const MethodCurve& c) { return c.method == a.baseline; })) {
    throw UsageError("baseline method '" + a.baseline + "' is not in " +
                     (dir / "curves.csv").string());
  }

  const AntifragilityReport report = antifragility_report(curves, a.baseline, cfg.study.methods);
  const fs::path out = a.out.empty() ? dir / "report" : fs::path(a.out);
  std::ostringstream csv, json;
  write_report_csv(csv, report);
  write_report_json(json, report);
  write_file(out / "skewness.csv", csv.str());
  write_file(out / "report.json", json.str());
  if (a.svg) {
    const auto angles = polar_angles(report.magnitude);
    std::vector<Series> polar, fits;
    for (const auto& r : report.rows) {
      polar.push_back({r.method, angles, r.normalized});
      fits.push_back({r.method, report.magnitude, r.fitted});
    }
    write_file(out / "polar.svg",
               polar_chart_svg(polar, sc.name + ": TTS difference over " + a.baseline + " (%)"));
    write_file(out / "fits.svg",
               line_chart_svg(fits, sc.name + ": fitted TTS", "magnitude", "TTS (veh*s)"));
  }
  for (const auto& r : report.rows) {
    if (r.degenerate) {
      std::cout << r.method << ": degenerate\n";
    } else {
      std::cout << r.method << ": skewness " << format_number(r.skewness) << " (rank " << r.rank
                << ")\n";
    }
  }
  return kExitOk;
}

void setup_logging(const std::string& level) {
  auto logger = spdlog::get("perimeter");
  if (!logger) logger = spdlog::stderr_color_mt("perimeter");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Two-region perimeter control experiments"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run episodes of one method");
  simulate->add_option("config", sim.config, "Config file")->required();
  simulate->add_option("--method", sim.method, "Control method")->required();
  simulate->add_option("--episodes", sim.episodes, "Number of episodes (default: whole schedule)");
  simulate->add_option("--seed", sim.seed, "Study seed override");
  simulate->add_option("--scenario", sim.scenario, "Scenario name override");
  simulate->add_option("--out", sim.out, "Output directory");
  simulate->add_flag("--svg", sim.svg, "Write an SVG TTS chart");

  StudyArgs st;
  auto* study = app.add_subcommand("study", "Run a replicated study");
  study->add_option("config", st.config, "Config file")->required();
  study->add_option("--scenario", st.scenario, "Scenario name");
  study->add_option("--methods", st.methods, "'all' or a comma-separated list");
  study->add_option("--reps", st.reps, "Replications")->check(CLI::PositiveNumber);
  study->add_option("--jobs", st.jobs, "Worker threads (0: available parallelism)")
      ->check(CLI::NonNegativeNumber);
  study->add_option("--seed", st.seed, "Study seed override");
  study->add_option("--out", st.out, "Study directory");
  study->add_flag("--traces", st.traces, "Also write full per-step traces");
  study->add_flag("--svg", st.svg, "Write an SVG curve chart");

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Antifragility report of a progressive study");
  report->add_option("study", rep.study, "Study directory")->required();
  report->add_option("--baseline", rep.baseline, "Baseline method");
  report->add_option("--out", rep.out, "Report directory (default: STUDY/report)");
  report->add_flag("--svg", rep.svg, "Write SVG polar and fit charts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  setup_logging(log_level);

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*study) return cmd_study(st);
    return cmd_report(rep);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace perimeter
