#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "hexmem/app/session_service.hpp"
#include "hexmem/errors.hpp"
#include "hexmem/stats.hpp"

using namespace hexmem;
using namespace hexmem::app;
namespace fs = std::filesystem;

namespace {

ServiceResources resources(bool with_policy = true) {
  static const auto model = std::make_shared<const DifficultyModel>();
  static const auto db =
      std::make_shared<const TaskDatabase>(TaskDatabase::build(*model, {1000, 5, 0.25}));
  static const auto policy =
      std::make_shared<const rl::PolicyParams>(rl::PolicyParams::initialize(3));
  return {model, db, with_policy ? policy : nullptr};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hexmem_svc_" + name);
  fs::remove_all(dir);
  return dir;
}

ServiceOptions options(const fs::path& dir, std::uint64_t seed = 1) {
  ServiceOptions o;
  o.data_dir = dir;
  o.seed = seed;
  o.clock = [] { return std::int64_t{1700000000000}; };
  return o;
}

int status_of(const std::function<void()>& fn, std::string* code = nullptr) {
  try {
    fn();
  } catch (const ServiceError& e) {
    if (code) *code = e.code();
    return e.status();
  }
  return 0;
}

// Clicks that hit `hits` of the targets and miss the rest.
std::vector<CellIndex> clicks_with_hits(const std::vector<CellIndex>& targets, int hits) {
  std::vector<CellIndex> clicks(targets.begin(), targets.begin() + hits);
  for (CellIndex c = 0; static_cast<int>(clicks.size()) < static_cast<int>(targets.size()); ++c) {
    if (std::find(targets.begin(), targets.end(), c) == targets.end()) clicks.push_back(c);
  }
  return clicks;
}

std::size_t line_count(const fs::path& file) {
  std::ifstream in(file);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_CASE("creating sessions") {
  const auto dir = fresh_dir("create");
  SessionService svc(resources(), options(dir));
  const auto a = svc.create_session("rule2");
  const auto b = svc.create_session("rule2", R"({"browser":"test"})");
  CHECK(a.session_id != b.session_id);
  CHECK(a.trial.trial == 1);
  CHECK(a.trial.memorize_ms == 2000);
  CHECK(a.layout.rows == 6);
  CHECK(a.layout.cols == 6);
  CHECK(a.layout.offset == "odd-r");
  CHECK(a.layout.orientation == "pointy-top");
  CHECK(std::abs(a.trial.difficulty - 0.5) <= 0.01);
  CHECK(a.trial.target_count == static_cast<int>(a.trial.targets.size()));
  CHECK(svc.phase(a.session_id) == SessionPhase::kAwaitingRecall);
  CHECK(svc.session_count() == 2);
  CHECK(fs::exists(dir / (a.session_id + ".jsonl")));
  CHECK(*svc.log(b.session_id).client == R"({"browser":"test"})");

  std::string code;
  CHECK(status_of([&] { svc.create_session("rule3"); }, &code) == 400);
  CHECK(code == "unknown_method");
  CHECK(status_of([&] { svc.create_session("rule2", "[1,2]"); }) == 400);
  CHECK(status_of([&] { svc.create_session("rule2", "{oops"); }) == 400);
}

TEST_CASE("rl without a policy is unavailable") {
  SessionService svc(resources(false), options(fresh_dir("nopolicy")));
  std::string code;
  CHECK(status_of([&] { svc.create_session("rl"); }, &code) == 503);
  CHECK(code == "policy_unavailable");
  CHECK_FALSE(svc.has_policy());
}

TEST_CASE("recall scoring and per-click flags") {
  auto o = options(fresh_dir("scoring"));
  o.controller.initial_targets = 8;
  SessionService svc(resources(), o);
  const auto s = svc.create_session("rule1");
  REQUIRE(s.trial.target_count == 8);

  const auto seven = clicks_with_hits(s.trial.targets, 7);
  const auto r = svc.submit_recall(s.session_id, seven);
  CHECK(r.trial == 1);
  CHECK(r.outcome.score == 0.875);
  CHECK(std::count(r.outcome.hits.begin(), r.outcome.hits.end(), false) == 1);
  CHECK_FALSE(r.outcome.hits.back());
  REQUIRE(r.next.has_value());
  CHECK(r.next->trial == 2);
  CHECK(r.next->target_count == 8);  // 0.875 sits inside the hold band

  const auto perfect = svc.submit_recall(s.session_id, r.next->targets);
  CHECK(perfect.outcome.score == 1.0);
  CHECK(perfect.outcome.win);
  for (bool f : perfect.outcome.hits) CHECK(f);
  CHECK(perfect.next->target_count == 9);

  const auto log = svc.log(s.session_id);
  REQUIRE(log.trials.size() == 2);
  CHECK(log.trials[0].timestamp_ms == 1700000000000);
  CHECK(*log.trials[0].requested_targets == 8);
}

TEST_CASE("protocol violations get distinct codes") {
  SessionService svc(resources(), options(fresh_dir("protocol")));
  const auto s = svc.create_session("rule2");
  auto targets = s.trial.targets;
  std::string code;

  auto short_clicks = targets;
  short_clicks.pop_back();
  CHECK(status_of([&] { svc.submit_recall(s.session_id, short_clicks); }, &code) == 400);
  CHECK(code == "wrong_click_count");

  auto duplicate = targets;
  duplicate[1] = duplicate[0];
  CHECK(status_of([&] { svc.submit_recall(s.session_id, duplicate); }, &code) == 400);
  CHECK(code == "duplicate_click");

  auto outside = targets;
  outside[0] = 36;
  CHECK(status_of([&] { svc.submit_recall(s.session_id, outside); }, &code) == 400);
  CHECK(code == "invalid_cell");

  CHECK(status_of([&] { svc.submit_recall("nope", targets); }, &code) == 404);
  CHECK(code == "unknown_session");
  CHECK(status_of([&] { svc.summary("nope"); }) == 404);

  // Rejected submissions leave the session untouched.
  CHECK(svc.log(s.session_id).trials.empty());
  CHECK(svc.current_trial(s.session_id)->targets == targets);
}

TEST_CASE("a session ends after twenty trials") {
  const auto dir = fresh_dir("twenty");
  SessionService svc(resources(), options(dir));
  const auto s = svc.create_session("rule2");
  TrialPayload current = s.trial;
  for (int t = 1; t <= 20; ++t) {
    const auto r = svc.submit_recall(s.session_id, current.targets);
    CHECK(r.trial == t);
    if (t < 20) {
      REQUIRE(r.next.has_value());
      CHECK_FALSE(r.summary.has_value());
      current = *r.next;
    } else {
      CHECK_FALSE(r.next.has_value());
      REQUIRE(r.summary.has_value());
      CHECK(r.summary->win_rate == 1.0);
      CHECK(r.summary->mean_score == 1.0);
      CHECK(r.summary->finished);
      CHECK_FALSE(r.summary->decline.has_value());  // constant scores
    }
  }
  CHECK(svc.phase(s.session_id) == SessionPhase::kFinished);
  CHECK_FALSE(svc.current_trial(s.session_id).has_value());
  std::string code;
  CHECK(status_of([&] { svc.submit_recall(s.session_id, current.targets); }, &code) == 409);
  CHECK(code == "session_finished");
  CHECK(line_count(dir / (s.session_id + ".jsonl")) == 21);
}

TEST_CASE("summaries") {
  const auto dir = fresh_dir("summary");
  SessionService svc(resources(), options(dir));
  const auto s = svc.create_session("rule2");

  const auto empty = svc.summary(s.session_id);
  CHECK(empty.completed_trials == 0);
  CHECK_FALSE(empty.mean_score.has_value());
  CHECK_FALSE(empty.decline.has_value());
  CHECK(empty.difficulties.empty());
  CHECK(empty.total_trials == 20);

  TrialPayload current = s.trial;
  for (int t = 0; t < 7; ++t) {
    const int hits = t % 2 == 0 ? current.target_count : current.target_count / 2;
    current = *svc.submit_recall(s.session_id, clicks_with_hits(current.targets, hits)).next;
  }
  const auto sum = svc.summary(s.session_id);
  CHECK(sum.completed_trials == 7);
  CHECK_FALSE(sum.finished);

  // Recompute from the file on disk.
  const SessionLog persisted = read_session_log(dir / (s.session_id + ".jsonl"));
  REQUIRE(persisted.trials.size() == 7);
  double total = 0.0;
  std::vector<double> x, y;
  for (const auto& t : persisted.trials) {
    total += t.score;
    x.push_back(t.trial);
    y.push_back(t.score);
  }
  CHECK(*sum.mean_score == doctest::Approx(total / 7.0).epsilon(1e-15));
  CHECK(*sum.win_rate == doctest::Approx(4.0 / 7.0));
  REQUIRE(sum.decline.has_value());
  CHECK(*sum.decline == doctest::Approx(*stats::pearson_r(x, y)));
  CHECK(sum.difficulties.size() == 7);
  CHECK(sum.difficulties[0] == persisted.trials[0].actual_difficulty);
}

TEST_CASE("restart replays logs into identical state") {
  const auto dir = fresh_dir("restart");
  std::vector<std::string> ids;
  std::vector<SessionLog> logs;
  std::vector<std::optional<TrialPayload>> pending;
  {
    SessionService svc(resources(), options(dir, 9));
    for (const char* method : {"rl", "rule1", "rule2"}) {
      const auto s = svc.create_session(method);
      TrialPayload current = s.trial;
      for (int t = 0; t < 6; ++t) {
        current = *svc.submit_recall(s.session_id, clicks_with_hits(current.targets, t % 3 + 2)).next;
      }
      ids.push_back(s.session_id);
    }
    // One finished session as well.
    const auto f = svc.create_session("rule2");
    TrialPayload current = f.trial;
    for (int t = 0; t < 20; ++t) {
      const auto r = svc.submit_recall(f.session_id, current.targets);
      if (r.next) current = *r.next;
    }
    ids.push_back(f.session_id);
    for (const auto& id : ids) {
      logs.push_back(svc.log(id));
      pending.push_back(svc.current_trial(id));
    }
  }

  SessionService restarted(resources(), options(dir, 10));
  CHECK(restarted.session_count() == ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    CHECK(restarted.log(ids[i]) == logs[i]);
    const auto now = restarted.current_trial(ids[i]);
    REQUIRE(now.has_value() == pending[i].has_value());
    if (now) {
      CHECK(now->targets == pending[i]->targets);
      CHECK(now->difficulty == pending[i]->difficulty);
      CHECK(now->trial == pending[i]->trial);
    }
  }
  CHECK(restarted.phase(ids.back()) == SessionPhase::kFinished);
  CHECK(status_of([&] { restarted.submit_recall(ids.back(), pending[0]->targets); }) == 409);

  // The restored rl session continues exactly as the original would have.
  const auto r = restarted.submit_recall(ids[0], pending[0]->targets);
  CHECK(r.trial == 7);
  CHECK(restarted.log(ids[0]).trials.back().log_prob.has_value());
}

TEST_CASE("a torn final line is dropped on restart") {
  const auto dir = fresh_dir("torn");
  std::string id;
  TrialPayload second;
  {
    SessionService svc(resources(), options(dir));
    const auto s = svc.create_session("rule2");
    id = s.session_id;
    second = *svc.submit_recall(id, s.trial.targets).next;
  }
  const auto file = dir / (id + ".jsonl");
  std::ofstream(file, std::ios::app) << R"({"type":"trial","trial":2,"tar)";
  SessionService restarted(resources(), options(dir));
  CHECK(restarted.log(id).trials.size() == 1);
  CHECK(restarted.current_trial(id)->targets == second.targets);
  CHECK(line_count(file) == 2);
}

TEST_CASE("logs from a different database are rejected") {
  const auto dir = fresh_dir("diverged");
  {
    SessionService svc(resources(), options(dir));
    const auto s = svc.create_session("rule2");
    svc.submit_recall(s.session_id, s.trial.targets);
  }
  auto other = resources();
  other.db = std::make_shared<const TaskDatabase>(TaskDatabase::build(*other.model, {1000, 6, 0.25}));
  CHECK_THROWS_AS(SessionService(other, options(dir)), FormatError);
}

TEST_CASE("concurrent submissions stay consistent") {
  const auto dir = fresh_dir("concurrent");
  SessionService svc(resources(), options(dir));
  constexpr int kSessions = 6;
  std::vector<std::string> ids;
  for (int i = 0; i < kSessions; ++i) ids.push_back(svc.create_session("rule2").session_id);

  std::atomic<int> accepted{0};
  std::atomic<int> finished_errors{0};
  std::vector<std::thread> workers;
  for (int w = 0; w < 4 * kSessions; ++w) {
    workers.emplace_back([&, w] {
      const auto& id = ids[w % kSessions];
      for (int k = 0; k < 10; ++k) {
        const auto current = svc.current_trial(id);
        if (!current) break;
        try {
          svc.submit_recall(id, current->targets);
          ++accepted;
        } catch (const ServiceError& e) {
          // Another worker may have advanced the session in between, which
          // makes these clicks a wrong count or a finished session.
          if (e.status() == 409) ++finished_errors;
        }
      }
    });
  }
  for (auto& t : workers) t.join();

  int total = 0;
  for (const auto& id : ids) {
    const auto log = svc.log(id);
    total += static_cast<int>(log.trials.size());
    for (std::size_t i = 0; i < log.trials.size(); ++i) CHECK(log.trials[i].trial == static_cast<int>(i + 1));
    CHECK(line_count(dir / (id + ".jsonl")) == log.trials.size() + 1);
    CHECK(read_session_log(dir / (id + ".jsonl")) == log);
  }
  CHECK(total == accepted.load());
}
