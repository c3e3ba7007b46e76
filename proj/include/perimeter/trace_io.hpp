#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "perimeter/experiments.hpp"

namespace perimeter {

/// One episode trace per line.
void write_trace_jsonl(std::ostream& out, const EpisodeTrace& trace);
/// Throws ConfigError with the line number on malformed input.
std::vector<EpisodeTrace> read_traces_jsonl(std::istream& in);

/// One line per episode: summary fields plus the trace metadata.
void write_training_log_line(std::ostream& out, const EpisodeTrace& trace,
                             const EpisodeSummary& summary);

/// method,replication,episode,phase,magnitude,tts_vehs,cumulative_reward,noise_scale
void write_summary_header(std::ostream& out);
void write_summary_row(std::ostream& out, const std::string& method, int replication,
                       const EpisodeSummary& s);

/// Lazily opened per-key output files. Distinct keys may be written from
/// different threads concurrently; one key must stay on one thread.
class FileSink {
 public:
  explicit FileSink(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::ofstream& stream(const std::string& file_name);

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<std::ofstream>> files_;
};

/// Shortest round-trip decimal form.
std::string format_number(double x);

}  // namespace perimeter
