#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hexmem/app/config.hpp"
#include "hexmem/controllers.hpp"
#include "hexmem/session_log.hpp"
#include "hexmem/taskdb.hpp"
#include "hexmem/taskmodel.hpp"

namespace hexmem::app {

// Failure reported to API clients. `status` is the HTTP status code and
// `code` a stable machine-readable tag.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

enum class SessionPhase { kAwaitingRecall, kBetweenTrials, kFinished };
std::string to_string(SessionPhase phase);

inline constexpr int kMemorizeMs = 2000;

struct LayoutDescriptor {
  int rows = 6;
  int cols = 6;
  std::string orientation = HexGrid::kOrientation;
  std::string offset = HexGrid::kOffset;
};

// A task as shown to the player.
struct TrialPayload {
  int trial = 0;  // 1-based
  std::vector<CellIndex> targets;
  int target_count = 0;
  double difficulty = 0.0;
  int memorize_ms = kMemorizeMs;
};

struct SessionSummary {
  std::string session_id;
  std::string method;
  int completed_trials = 0;
  int total_trials = 0;
  bool finished = false;
  std::optional<double> mean_score;  // unset before the first trial
  std::optional<double> win_rate;
  std::vector<double> difficulties;  // task difficulty per completed trial
  std::vector<double> scores;
  // Pearson r of score against trial number; unset with fewer than two
  // trials or constant scores.
  std::optional<double> decline;
};

struct CreatedSession {
  std::string session_id;
  std::string method;
  LayoutDescriptor layout;
  TrialPayload trial;
};

struct RecallResult {
  int trial = 0;
  TrialOutcome outcome;
  std::optional<TrialPayload> next;       // while the session continues
  std::optional<SessionSummary> summary;  // after the last trial
};

// Read-only resources shared by every session.
struct ServiceResources {
  std::shared_ptr<const DifficultyModel> model;
  std::shared_ptr<const TaskDatabase> db;
  std::shared_ptr<const rl::PolicyParams> policy;  // null disables the rl method
};

// Loads the model, database and policy named by `config`. Builds a database
// in memory when no path is configured.
ServiceResources load_resources(const AppConfig& config);

struct ServiceOptions {
  std::filesystem::path data_dir;
  ControllerConfig controller;
  rl::RewardSpec reward;
  int trials = 20;
  // Seeds tokens and task streams; unset draws from std::random_device.
  std::optional<std::uint64_t> seed;
  // Milliseconds since the epoch; replaceable for tests.
  std::function<std::int64_t()> clock;
};

// Live adaptive sessions. Every completed trial is appended to
// <data_dir>/<session id>.jsonl and flushed to disk before the call
// returns; constructing a service over an existing data directory replays
// those logs to restore the sessions. Calls for different sessions run
// concurrently, calls for one session are serialized.
class SessionService {
 public:
  SessionService(ServiceResources resources, ServiceOptions options);
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  CreatedSession create_session(const std::string& method,
                                const std::optional<std::string>& client_metadata = {});
  RecallResult submit_recall(const std::string& session_id, const std::vector<CellIndex>& clicks);
  SessionSummary summary(const std::string& session_id) const;

  // Current state, for inspection and tests.
  SessionPhase phase(const std::string& session_id) const;
  std::optional<TrialPayload> current_trial(const std::string& session_id) const;
  SessionLog log(const std::string& session_id) const;

  std::size_t session_count() const;
  bool has_policy() const { return resources_.policy != nullptr; }
  const ServiceResources& resources() const { return resources_; }
  LayoutDescriptor layout() const;

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& session_id) const;
  std::shared_ptr<Session> restore(const std::filesystem::path& file);
  void advance(Session& s) const;
  SessionSummary summarize(const Session& s) const;
  std::string new_token();
  std::uint64_t next_seed();
  std::int64_t now_ms() const;

  ServiceResources resources_;
  ServiceOptions options_;
  std::map<ControllerKind, std::unique_ptr<Controller>> controllers_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex rng_mutex_;
  Rng token_rng_;
};

void to_json(nlohmann::json& j, const LayoutDescriptor& v);
void to_json(nlohmann::json& j, const TrialPayload& v);
void to_json(nlohmann::json& j, const SessionSummary& v);
void to_json(nlohmann::json& j, const CreatedSession& v);
void to_json(nlohmann::json& j, const RecallResult& v);

}  // namespace hexmem::app
