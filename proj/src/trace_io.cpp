#include "perimeter/trace_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "perimeter/errors.hpp"

namespace perimeter {

using nlohmann::json;

std::string format_number(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

namespace {

json step_to_json(const StepRecord& s) {
  return json{{"step", s.step},
              {"time", s.time},
              {"n", s.state.n},
              {"u", {s.action.u12, s.action.u21}},
              {"demand", s.demand},
              {"completion", s.completion},
              {"reward", {s.reward.completion, s.reward.h, s.reward.dh}}};
}

StepRecord step_from_json(const json& j) {
  StepRecord s;
  s.step = j.at("step").get<int>();
  s.time = j.at("time").get<double>();
  s.state.n = j.at("n").get<OdFlows>();
  s.action.u12 = j.at("u").at(0).get<double>();
  s.action.u21 = j.at("u").at(1).get<double>();
  s.demand = j.at("demand").get<OdFlows>();
  s.completion = j.at("completion").get<OdFlows>();
  s.reward.completion = j.at("reward").at(0).get<double>();
  s.reward.h = j.at("reward").at(1).get<double>();
  s.reward.dh = j.at("reward").at(2).get<double>();
  return s;
}

}  // namespace

void write_trace_jsonl(std::ostream& out, const EpisodeTrace& trace) {
  json j{{"scenario", trace.scenario},
         {"method", trace.method},
         {"replication", trace.replication},
         {"episode", trace.episode},
         {"seed", trace.seed},
         {"dt", trace.dt},
         {"final_n", trace.final_state.n},
         {"metadata", trace.metadata}};
  json steps = json::array();
  for (const auto& s : trace.steps) steps.push_back(step_to_json(s));
  j["steps"] = std::move(steps);
  out << j.dump() << '\n';
}

std::vector<EpisodeTrace> read_traces_jsonl(std::istream& in) {
  std::vector<EpisodeTrace> traces;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      EpisodeTrace t;
      t.scenario = j.at("scenario").get<std::string>();
      t.method = j.at("method").get<std::string>();
      t.replication = j.at("replication").get<int>();
      t.episode = j.at("episode").get<int>();
      t.seed = j.at("seed").get<std::uint64_t>();
      t.dt = j.at("dt").get<double>();
      t.final_state.n = j.at("final_n").get<OdFlows>();
      t.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
      for (const auto& s : j.at("steps")) t.steps.push_back(step_from_json(s));
      traces.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("trace: ") + e.what(), n);
    }
  }
  return traces;
}

void write_training_log_line(std::ostream& out, const EpisodeTrace& trace,
                             const EpisodeSummary& summary) {
  json j{{"method", trace.method},
         {"replication", trace.replication},
         {"episode", summary.episode},
         {"phase", to_string(summary.phase)},
         {"magnitude", summary.magnitude},
         {"tts_vehs", summary.tts},
         {"cumulative_reward", summary.cumulative_reward},
         {"noise_scale", summary.noise_scale},
         {"metadata", trace.metadata}};
  out << j.dump() << '\n';
}

void write_summary_header(std::ostream& out) {
  out << "method,replication,episode,phase,magnitude,tts_vehs,cumulative_reward,noise_scale\n";
}

void write_summary_row(std::ostream& out, const std::string& method, int replication,
                       const EpisodeSummary& s) {
  out << method << ',' << replication << ',' << s.episode << ',' << to_string(s.phase) << ','
      << format_number(s.magnitude) << ',' << format_number(s.tts) << ','
      << format_number(s.cumulative_reward) << ',' << format_number(s.noise_scale) << '\n';
}

std::ofstream& FileSink::stream(const std::string& file_name) {
  std::lock_guard lock(mutex_);
  auto& slot = files_[file_name];
  if (!slot) {
    std::filesystem::create_directories(dir_);
    slot = std::make_unique<std::ofstream>(dir_ / file_name, std::ios::trunc);
    if (!*slot) throw std::runtime_error("cannot open " + (dir_ / file_name).string());
  }
  return *slot;
}

}  // namespace perimeter
