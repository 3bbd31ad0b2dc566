#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hexmem/hexgrid.hpp"

namespace hexmem {

struct TrialRecord {
  int trial = 0;  // 1-based
  std::vector<CellIndex> targets;
  std::optional<double> requested_difficulty;  // continuous controllers
  std::optional<int> requested_targets;        // target-count controller
  double actual_difficulty = 0.0;
  std::vector<CellIndex> clicks;
  std::vector<bool> hits;
  int correct = 0;
  double score = 0.0;
  bool win = false;
  double reward = 0.0;
  std::optional<double> raw_action;  // RL only: pre-squash policy output
  std::optional<double> log_prob;    // RL only: behaviour log density
  std::optional<std::int64_t> timestamp_ms;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct SessionLog {
  std::string session_id;
  std::string method;  // "rl", "rule1" or "rule2"
  std::string player_id;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> created_ms;
  std::optional<std::string> client;  // serialized JSON object from the client
  std::vector<TrialRecord> trials;

  double mean_score() const;
  double win_rate() const;

  friend bool operator==(const SessionLog&, const SessionLog&) = default;
};

void to_json(nlohmann::json& j, const TrialRecord& r);
void from_json(const nlohmann::json& j, TrialRecord& r);

// Newline-delimited records: one {"type":"session",...} header followed by
// one {"type":"trial",...} line per trial. Lines of other types are skipped
// on read.
std::string session_header_line(const SessionLog& log);
std::string trial_line(const TrialRecord& record);
void write_session_log(std::ostream& out, const SessionLog& log);
SessionLog read_session_log(std::istream& in);
SessionLog read_session_log(const std::filesystem::path& path);
std::vector<SessionLog> read_session_logs(const std::filesystem::path& directory);

}  // namespace hexmem
