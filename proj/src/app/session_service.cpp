#include "hexmem/app/session_service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "hexmem/errors.hpp"
#include "hexmem/rl/reward.hpp"
#include "hexmem/rl/train.hpp"
#include "hexmem/stats.hpp"

namespace hexmem::app {

using nlohmann::json;

namespace {

constexpr std::uint64_t kTaskStream = 0x7a5c;

// Appends `text` to `path` and forces it to stable storage.
void append_durably(const std::filesystem::path& path, const std::string& text) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw ServiceError(500, "storage_error",
                       fmt::format("cannot open {}: {}", path.string(), std::strerror(errno)));
  }
  std::size_t written = 0;
  while (written < text.size()) {
    const ssize_t n = ::write(fd, text.data() + written, text.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw ServiceError(500, "storage_error",
                         fmt::format("cannot write {}: {}", path.string(), std::strerror(err)));
    }
    written += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw ServiceError(500, "storage_error", "fsync failed for " + path.string());
}

void sync_directory(const std::filesystem::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

// A write interrupted by a crash leaves an unterminated last line. That
// trial was never acknowledged, so it is dropped.
void drop_torn_tail(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.empty() || text.back() == '\n') return;
  const auto last_newline = text.rfind('\n');
  const std::size_t keep = last_newline == std::string::npos ? 0 : last_newline + 1;
  in.close();
  std::filesystem::resize_file(file, keep);
}

TrialPayload payload(int trial, const SelectedTask& selected) {
  TrialPayload p;
  p.trial = trial;
  p.targets = selected.task.targets();
  p.target_count = selected.task.size();
  p.difficulty = selected.difficulty;
  return p;
}

}  // namespace

std::string to_string(SessionPhase phase) {
  switch (phase) {
    case SessionPhase::kAwaitingRecall: return "awaiting_recall";
    case SessionPhase::kBetweenTrials: return "between_trials";
    case SessionPhase::kFinished: return "finished";
  }
  return "unknown";
}

struct SessionService::Session {
  std::mutex mutex;
  const Controller* controller = nullptr;
  ControllerState state;
  Rng task_rng;
  SelectedTask current;
  SessionPhase phase = SessionPhase::kBetweenTrials;
  SessionLog log;
  std::filesystem::path path;
};

ServiceResources load_resources(const AppConfig& config) {
  config.validate();
  ServiceResources r;
  auto model = std::make_shared<const DifficultyModel>(HexGrid(), config.weights);
  if (config.ddb_path.empty()) {
    BuildOptions build;
    build.per_stratum = config.ddb_per_stratum;
    build.seed = config.ddb_seed;
    r.db = std::make_shared<const TaskDatabase>(TaskDatabase::build(*model, build));
  } else {
    r.db = std::make_shared<const TaskDatabase>(
        TaskDatabase::load(config.ddb_path, model->fingerprint()));
  }
  if (!config.policy_path.empty()) {
    r.policy = std::make_shared<const rl::PolicyParams>(
        rl::load_checkpoint(config.policy_path).params);
  }
  r.model = std::move(model);
  return r;
}

SessionService::SessionService(ServiceResources resources, ServiceOptions options)
    : resources_(std::move(resources)), options_(std::move(options)) {
  if (!resources_.model || !resources_.db) throw ConfigError("service needs a model and a database");
  if (resources_.db->empty()) throw ConfigError("service needs a nonempty database");
  if (resources_.db->fingerprint() != resources_.model->fingerprint()) {
    throw ConfigError("database was built under a different difficulty metric");
  }
  if (options_.trials < 1) throw ConfigError("sessions need at least one trial");
  if (options_.data_dir.empty()) throw ConfigError("service needs a data directory");

  for (ControllerKind kind : {ControllerKind::kRl, ControllerKind::kRule1, ControllerKind::kRule2}) {
    if (kind == ControllerKind::kRl && !resources_.policy) continue;
    controllers_[kind] = std::make_unique<Controller>(
        kind, options_.controller, kind == ControllerKind::kRl ? resources_.policy : nullptr);
  }
  token_rng_ = Rng(options_.seed ? *options_.seed : std::random_device{}() ^
                                                        (std::uint64_t{std::random_device{}()} << 32));

  std::filesystem::create_directories(options_.data_dir);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(options_.data_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto s = restore(f);
    sessions_.emplace(s->log.session_id, std::move(s));
  }
}

SessionService::~SessionService() = default;

std::int64_t SessionService::now_ms() const {
  if (options_.clock) return options_.clock();
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string SessionService::new_token() {
  std::lock_guard lock(rng_mutex_);
  return fmt::format("{:016x}{:016x}", token_rng_(), token_rng_());
}

std::uint64_t SessionService::next_seed() {
  std::lock_guard lock(rng_mutex_);
  return token_rng_();
}

LayoutDescriptor SessionService::layout() const {
  LayoutDescriptor d;
  d.rows = resources_.model->grid().rows();
  d.cols = resources_.model->grid().cols();
  return d;
}

void SessionService::advance(Session& s) const {
  s.current = s.controller->select_task(s.state, *resources_.db, *resources_.model, s.task_rng);
  s.phase = SessionPhase::kAwaitingRecall;
}

std::shared_ptr<SessionService::Session> SessionService::restore(
    const std::filesystem::path& file) {
  drop_torn_tail(file);
  auto s = std::make_shared<Session>();
  s->path = file;
  s->log = read_session_log(file);
  const auto where = "session " + s->log.session_id;
  if (file.stem() != s->log.session_id) throw FormatError(where + ": file name does not match");
  const ControllerKind kind = parse_controller_kind(s->log.method);
  const auto it = controllers_.find(kind);
  if (it == controllers_.end()) {
    throw ConfigError(where + " uses the rl method but no policy is loaded");
  }
  s->controller = it->second.get();
  s->state = s->controller->init();
  s->task_rng = make_rng(s->log.seed, kTaskStream);

  const auto n = static_cast<int>(s->log.trials.size());
  if (n > options_.trials) throw FormatError(where + ": more trials than a session allows");
  for (int i = 0; i < n; ++i) {
    const TrialRecord& rec = s->log.trials[i];
    advance(*s);
    if (rec.trial != i + 1 || s->current.task.targets() != rec.targets) {
      throw FormatError(fmt::format("{}: replay diverged at trial {}", where, i + 1));
    }
    const TrialOutcome outcome = score_trial(s->current.task, rec.clicks);
    if (outcome.score != rec.score) {
      throw FormatError(fmt::format("{}: logged score disagrees at trial {}", where, i + 1));
    }
    if (i + 1 < options_.trials) s->controller->next_difficulty(s->state, outcome.score);
  }
  if (n < options_.trials) {
    advance(*s);
  } else {
    s->phase = SessionPhase::kFinished;
  }
  return s;
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown_session", "no session " + id);
  return it->second;
}

CreatedSession SessionService::create_session(const std::string& method,
                                              const std::optional<std::string>& client_metadata) {
  ControllerKind kind;
  try {
    kind = parse_controller_kind(method);
  } catch (const std::exception&) {
    throw ServiceError(400, "unknown_method",
                       "unknown method \"" + method + "\" (expected rl, rule1 or rule2)");
  }
  const auto it = controllers_.find(kind);
  if (it == controllers_.end()) {
    throw ServiceError(503, "policy_unavailable", "the rl method needs a loaded policy");
  }

  auto s = std::make_shared<Session>();
  s->controller = it->second.get();
  s->log.session_id = new_token();
  s->log.method = to_string(kind);
  s->log.player_id = "human";
  s->log.seed = next_seed();
  s->log.created_ms = now_ms();
  if (client_metadata) {
    json parsed;
    try {
      parsed = json::parse(*client_metadata);
    } catch (const json::exception&) {
      throw ServiceError(400, "bad_request", "client metadata is not valid JSON");
    }
    if (!parsed.is_object()) throw ServiceError(400, "bad_request", "client metadata must be an object");
    s->log.client = parsed.dump();
  }
  s->path = options_.data_dir / (s->log.session_id + ".jsonl");
  s->state = s->controller->init();
  s->task_rng = make_rng(s->log.seed, kTaskStream);
  advance(*s);

  append_durably(s->path, session_header_line(s->log) + "\n");
  sync_directory(options_.data_dir);

  CreatedSession out;
  out.session_id = s->log.session_id;
  out.method = s->log.method;
  out.layout = layout();
  out.trial = payload(1, s->current);
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(s->log.session_id, std::move(s));
  }
  return out;
}

RecallResult SessionService::submit_recall(const std::string& session_id,
                                           const std::vector<CellIndex>& clicks) {
  const auto session = find(session_id);
  Session& s = *session;
  std::lock_guard lock(s.mutex);
  if (s.phase == SessionPhase::kFinished) {
    throw ServiceError(409, "session_finished", "session " + session_id + " is finished");
  }

  const MemoryTask& task = s.current.task;
  if (static_cast<int>(clicks.size()) != task.size()) {
    throw ServiceError(400, "wrong_click_count",
                       fmt::format("expected {} clicks, got {}", task.size(), clicks.size()));
  }
  const int cells = resources_.model->grid().cell_count();
  CellMask seen = 0;
  for (CellIndex c : clicks) {
    if (c < 0 || c >= cells) throw ServiceError(400, "invalid_cell", fmt::format("no cell {}", c));
    if ((seen >> c) & 1) throw ServiceError(400, "duplicate_click", fmt::format("cell {} clicked twice", c));
    seen |= CellMask{1} << c;
  }

  const TrialOutcome outcome = score_trial(task, clicks);
  TrialRecord rec;
  rec.trial = static_cast<int>(s.log.trials.size()) + 1;
  if (s.controller->kind() == ControllerKind::kRule1) {
    rec.requested_targets = s.state.target_count;
  } else {
    rec.requested_difficulty = s.state.difficulty;
  }
  rec.raw_action = s.state.raw_action;
  rec.log_prob = s.state.log_prob;
  rec.targets = task.targets();
  rec.actual_difficulty = s.current.difficulty;
  rec.clicks = outcome.clicks;
  rec.hits = outcome.hits;
  rec.correct = outcome.correct;
  rec.score = outcome.score;
  rec.win = outcome.win;
  rec.reward = rl::reward(options_.reward, outcome.score, s.current.difficulty);
  rec.timestamp_ms = now_ms();

  // Nothing changes in memory unless the record reached the disk.
  append_durably(s.path, trial_line(rec) + "\n");
  s.log.trials.push_back(rec);
  s.phase = SessionPhase::kBetweenTrials;

  RecallResult out;
  out.trial = rec.trial;
  out.outcome = outcome;
  if (rec.trial >= options_.trials) {
    s.phase = SessionPhase::kFinished;
    out.summary = summarize(s);
  } else {
    s.controller->next_difficulty(s.state, outcome.score);
    advance(s);
    out.next = payload(rec.trial + 1, s.current);
  }
  return out;
}

SessionSummary SessionService::summarize(const Session& s) const {
  SessionSummary sum;
  sum.session_id = s.log.session_id;
  sum.method = s.log.method;
  sum.completed_trials = static_cast<int>(s.log.trials.size());
  sum.total_trials = options_.trials;
  sum.finished = s.phase == SessionPhase::kFinished;
  std::vector<double> index;
  for (const auto& t : s.log.trials) {
    sum.difficulties.push_back(t.actual_difficulty);
    sum.scores.push_back(t.score);
    index.push_back(t.trial);
  }
  if (!s.log.trials.empty()) {
    sum.mean_score = s.log.mean_score();
    sum.win_rate = s.log.win_rate();
  }
  if (index.size() >= 2) sum.decline = stats::pearson_r(index, sum.scores);
  return sum;
}

SessionSummary SessionService::summary(const std::string& session_id) const {
  const auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  return summarize(*session);
}

SessionPhase SessionService::phase(const std::string& session_id) const {
  const auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  return session->phase;
}

std::optional<TrialPayload> SessionService::current_trial(const std::string& session_id) const {
  const auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  if (session->phase != SessionPhase::kAwaitingRecall) return std::nullopt;
  return payload(static_cast<int>(session->log.trials.size()) + 1, session->current);
}

SessionLog SessionService::log(const std::string& session_id) const {
  const auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  return session->log;
}

std::size_t SessionService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

void to_json(json& j, const LayoutDescriptor& v) {
  j = json{{"rows", v.rows},
           {"cols", v.cols},
           {"orientation", v.orientation},
           {"offset", v.offset},
           {"cell_count", v.rows * v.cols},
           {"numbering", "row-major"}};
}

void to_json(json& j, const TrialPayload& v) {
  j = json{{"trial", v.trial},
           {"targets", v.targets},
           {"target_count", v.target_count},
           {"difficulty", v.difficulty},
           {"memorize_ms", v.memorize_ms}};
}

void to_json(json& j, const SessionSummary& v) {
  j = json{{"session_id", v.session_id},
           {"method", v.method},
           {"completed_trials", v.completed_trials},
           {"total_trials", v.total_trials},
           {"finished", v.finished},
           {"mean_score", v.mean_score ? json(*v.mean_score) : json(nullptr)},
           {"win_rate", v.win_rate ? json(*v.win_rate) : json(nullptr)},
           {"difficulties", v.difficulties},
           {"scores", v.scores},
           {"decline", v.decline ? json(*v.decline) : json(nullptr)},
           {"decline_defined", v.decline.has_value()}};
}

void to_json(json& j, const CreatedSession& v) {
  j = json{{"session_id", v.session_id},
           {"method", v.method},
           {"layout", v.layout},
           {"trial", v.trial}};
}

void to_json(json& j, const RecallResult& v) {
  j = json{{"trial", v.trial},
           {"clicks", v.outcome.clicks},
           {"correct_flags", v.outcome.hits},
           {"correct", v.outcome.correct},
           {"score", v.outcome.score},
           {"win", v.outcome.win},
           {"finished", v.summary.has_value()},
           {"next", v.next ? json(*v.next) : json(nullptr)},
           {"summary", v.summary ? json(*v.summary) : json(nullptr)}};
}

}  // namespace hexmem::app
