#include "hexmem/session_log.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "hexmem/errors.hpp"

namespace hexmem {

using nlohmann::json;

double SessionLog::mean_score() const {
  if (trials.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : trials) sum += t.score;
  return sum / trials.size();
}

double SessionLog::win_rate() const {
  if (trials.empty()) return 0.0;
  const auto wins = std::count_if(trials.begin(), trials.end(),
                                  [](const TrialRecord& t) { return t.win; });
  return static_cast<double>(wins) / trials.size();
}

namespace {

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& v) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    v = it->get<T>();
  } else {
    v.reset();
  }
}

}  // namespace

void to_json(json& j, const TrialRecord& r) {
  j = json{{"type", "trial"},
           {"trial", r.trial},
           {"targets", r.targets},
           {"actual_difficulty", r.actual_difficulty},
           {"clicks", r.clicks},
           {"hits", r.hits},
           {"correct", r.correct},
           {"score", r.score},
           {"win", r.win},
           {"reward", r.reward}};
  put_optional(j, "requested_difficulty", r.requested_difficulty);
  put_optional(j, "requested_targets", r.requested_targets);
  put_optional(j, "raw_action", r.raw_action);
  put_optional(j, "log_prob", r.log_prob);
  put_optional(j, "timestamp_ms", r.timestamp_ms);
}

void from_json(const json& j, TrialRecord& r) {
  j.at("trial").get_to(r.trial);
  j.at("targets").get_to(r.targets);
  j.at("actual_difficulty").get_to(r.actual_difficulty);
  j.at("clicks").get_to(r.clicks);
  j.at("hits").get_to(r.hits);
  j.at("correct").get_to(r.correct);
  j.at("score").get_to(r.score);
  j.at("win").get_to(r.win);
  j.at("reward").get_to(r.reward);
  get_optional(j, "requested_difficulty", r.requested_difficulty);
  get_optional(j, "requested_targets", r.requested_targets);
  get_optional(j, "raw_action", r.raw_action);
  get_optional(j, "log_prob", r.log_prob);
  get_optional(j, "timestamp_ms", r.timestamp_ms);
}

std::string session_header_line(const SessionLog& log) {
  json j{{"type", "session"},
         {"session_id", log.session_id},
         {"method", log.method},
         {"player_id", log.player_id},
         {"seed", log.seed}};
  put_optional(j, "created_ms", log.created_ms);
  if (log.client) j["client"] = json::parse(*log.client);
  return j.dump();
}

std::string trial_line(const TrialRecord& record) { return json(record).dump(); }

void write_session_log(std::ostream& out, const SessionLog& log) {
  out << session_header_line(log) << '\n';
  for (const auto& t : log.trials) out << trial_line(t) << '\n';
}

SessionLog read_session_log(std::istream& in) {
  SessionLog log;
  bool have_header = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError("session log line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      const std::string type = j.value("type", "");
      if (type == "session") {
        log.session_id = j.at("session_id").get<std::string>();
        log.method = j.at("method").get<std::string>();
        log.player_id = j.value("player_id", "");
        log.seed = j.value("seed", std::uint64_t{0});
        get_optional(j, "created_ms", log.created_ms);
        if (auto it = j.find("client"); it != j.end() && !it->is_null()) {
          log.client = it->dump();
        }
        have_header = true;
      } else if (type == "trial") {
        log.trials.push_back(j.get<TrialRecord>());
      }
    } catch (const json::exception& e) {
      throw FormatError("session log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw FormatError("session log has no session header");
  return log;
}

SessionLog read_session_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_session_log(in);
}

std::vector<SessionLog> read_session_logs(const std::filesystem::path& directory) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<SessionLog> logs;
  logs.reserve(files.size());
  for (const auto& f : files) logs.push_back(read_session_log(f));
  return logs;
}

}  // namespace hexmem
