#include <doctest.h>

#include <bit>
#include <filesystem>
#include <fstream>
#include <set>

#include "hexmem/errors.hpp"
#include "hexmem/taskdb.hpp"
#include "oracles.hpp"

using namespace hexmem;
namespace fs = std::filesystem;

namespace {

const DifficultyModel& model() {
  static const DifficultyModel m;
  return m;
}

const TaskDatabase& small_db() {
  static const TaskDatabase db = TaskDatabase::build(model(), {1000, 17, 0.25});
  return db;
}

const TaskDatabase& default_db() {
  static const TaskDatabase db = TaskDatabase::build(model(), {20000, 1, 0.25});
  return db;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("hexmem_test_" + name);
}

// Linear scan: smallest |difficulty - target| over non-excluded entries.
double nearest_gap(const TaskDatabase& db, double target, const ExclusionWindow& ex) {
  double best = 1e9;
  for (const auto& e : db.entries_by_difficulty()) {
    if (!ex.contains(e.id)) best = std::min(best, std::abs(e.difficulty - target));
  }
  return best;
}

}  // namespace

TEST_CASE("task counts are exact sums of binomials") {
  CHECK(total_task_count(4, 14) == 8348891641ULL);
  CHECK(total_task_count(4, 4) == 58905ULL);
  CHECK(total_task_count(0, 36) == (1ULL << 36));
  for (int k = 0; k <= 36; ++k) CHECK(binomial(36, k) == oracle::pascal(36, k));
  for (int n = 0; n <= 64; n += 8) {
    for (int k = 0; k <= n; ++k) REQUIRE(binomial(n, k) == oracle::pascal(n, k));
  }
  CHECK_THROWS_AS(total_task_count(5, 4), DomainError);
  CHECK_THROWS_AS(total_task_count(-1, 4), DomainError);
  CHECK_THROWS_AS(total_task_count(4, 37), DomainError);
}

TEST_CASE("builds are deterministic per seed") {
  const auto a = TaskDatabase::build(model(), {1000, 17, 0.25});
  CHECK(a == small_db());
  const auto b = TaskDatabase::build(model(), {1000, 18, 0.25});
  CHECK_FALSE(b == small_db());
}

TEST_CASE("stored entries are valid, distinct, sorted and correctly scored") {
  const auto& db = small_db();
  CHECK(db.size() == 11000);
  CHECK(db.fingerprint() == model().fingerprint());
  for (int n = 4; n <= 14; ++n) {
    const auto& s = db.stratum(n);
    REQUIRE(s.size() == 1000);
    std::set<TaskId> ids;
    for (std::size_t i = 0; i < s.size(); ++i) {
      REQUIRE(std::popcount(s[i].id) == n);
      REQUIRE(s[i].difficulty >= 0.0);
      REQUIRE(s[i].difficulty <= 1.0);
      if (i > 0) REQUIRE(s[i - 1].difficulty <= s[i].difficulty);
      const double exact = model().difficulty(MemoryTask::from_mask(s[i].id));
      REQUIRE(std::abs(exact - s[i].difficulty) <= 0.5 / 4294967295.0 + 1e-15);
      ids.insert(s[i].id);
    }
    CHECK(ids.size() == s.size());
  }
  CHECK_THROWS_AS(db.stratum(3), DomainError);
}

TEST_CASE("requests beyond a stratum's size are rejected") {
  CHECK_THROWS_AS(TaskDatabase::build(model(), {60000, 1, 0.25}), DomainError);
  CHECK_THROWS_AS(TaskDatabase::build(model(), {0, 1, 0.25}), DomainError);
}

TEST_CASE("stratum envelopes cover a fresh uniform sample") {
  const auto& db = default_db();
  const auto& cal = model().calibration();
  Rng rng = make_rng(4242);
  for (int n = 4; n <= 14; ++n) {
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
      std::vector<int> pool(36);
      for (int c = 0; c < 36; ++c) pool[c] = c;
      shuffle(pool.begin(), pool.end(), rng);
      pool.resize(n);
      const auto f = oracle::features(pool);
      const double d = model().normalize((f.f_t + f.f_c + f.f_d) / 3.0);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    const auto& s = db.stratum(n);
    CHECK(s.front().difficulty <= lo + 1e-9);
    CHECK(s.back().difficulty >= hi - 1e-9);
    CHECK(s.front().difficulty >= model().normalize(cal.stratum_low[n - 4]) - 1e-9);
  }
}

TEST_CASE("lookup agrees with a linear-scan oracle") {
  const auto& db = small_db();
  Rng queries = make_rng(8);
  Rng rng = make_rng(9);
  ExclusionWindow none(0);
  for (int i = 0; i < 1000; ++i) {
    const double target = uniform01(queries);
    const auto e = db.lookup(target, none, rng);
    const double gap = std::abs(e.difficulty - target);
    const double best = nearest_gap(db, target, none);
    if (best <= 0.01) {
      REQUIRE(gap <= 0.01);
    } else {
      REQUIRE(gap == best);
    }
    REQUIRE(gap <= best + 0.01);
  }
}

TEST_CASE("lookup boundaries and self-retrieval") {
  const auto& db = small_db();
  Rng rng = make_rng(1);
  ExclusionWindow none(0);
  const auto& all = db.entries_by_difficulty();
  const auto low = db.lookup(0.0, none, rng);
  CHECK(low.difficulty <= all.front().difficulty + 0.01);
  const auto mid = all[all.size() / 2];
  CHECK(std::abs(db.lookup(mid.difficulty, none, rng).difficulty - mid.difficulty) <= 0.01);
  CHECK_THROWS_AS(db.lookup(1.5, none, rng), DomainError);
  CHECK_THROWS_AS(TaskDatabase().lookup(0.5, none, rng), StateError);
}

TEST_CASE("exclusions push lookup to the second-nearest entry") {
  const auto t = [](std::vector<int> c) { return MemoryTask(std::move(c)).mask(); };
  const TaskId a = t({0, 1, 2, 3});
  const TaskId b = t({0, 1, 2, 4});
  const TaskId c = t({0, 1, 2, 5});
  const auto db = TaskDatabase::from_entries({{a, 0.10}, {b, 0.20}, {c, 0.35}}, 1);
  Rng rng = make_rng(0);
  ExclusionWindow ex;
  CHECK(db.lookup(0.2, ex, rng).id == b);
  ex.push(b);
  CHECK(db.lookup(0.2, ex, rng).id == a);
  ex.push(a);
  CHECK(db.lookup(0.2, ex, rng).id == c);
  ex.push(c);
  CHECK_THROWS_AS(db.lookup(0.2, ex, rng), StateError);
}

TEST_CASE("lookup picks uniformly inside the band") {
  const auto& db = small_db();
  Rng rng = make_rng(12);
  ExclusionWindow none(0);
  std::set<TaskId> seen;
  for (int i = 0; i < 200; ++i) seen.insert(db.lookup(0.5, none, rng).id);
  CHECK(seen.size() > 50);
}

TEST_CASE("exclusion window keeps the last ids") {
  ExclusionWindow w(3);
  for (TaskId id = 1; id <= 5; ++id) w.push(id);
  CHECK(w.ids().size() == 3);
  CHECK_FALSE(w.contains(2));
  CHECK(w.contains(3));
  CHECK(w.contains(5));
}

TEST_CASE("sequential lookups never repeat within the window") {
  const auto& db = default_db();
  Rng rng = make_rng(77);
  ExclusionWindow window;
  std::deque<TaskId> recent;
  for (int i = 0; i < 10000; ++i) {
    const double target = uniform01(rng);
    const auto e = db.lookup(target, window, rng);
    REQUIRE(std::find(recent.begin(), recent.end(), e.id) == recent.end());
    window.push(e.id);
    recent.push_back(e.id);
    if (recent.size() > 10) recent.pop_front();
  }
}

TEST_CASE("save and load round trip") {
  const auto path = temp_file("roundtrip.ddb");
  small_db().save(path);
  const auto loaded = TaskDatabase::load(path, model().fingerprint());
  CHECK(loaded == small_db());
  CHECK(loaded.seed() == 17);
  CHECK(loaded.entries_by_difficulty().size() == small_db().size());

  CHECK_THROWS_AS(TaskDatabase::load(path, model().fingerprint() ^ 1), ConfigError);

  const auto size = fs::file_size(path);
  fs::resize_file(path, size - 3);
  CHECK_THROWS_AS(TaskDatabase::load(path, model().fingerprint()), FormatError);

  {
    std::ofstream junk(path, std::ios::binary | std::ios::trunc);
    junk << "NOTADDB!";
  }
  CHECK_THROWS_AS(TaskDatabase::load(path, model().fingerprint()), FormatError);
  CHECK_THROWS_AS(TaskDatabase::load(temp_file("missing.ddb"), 0), FormatError);
  fs::remove(path);
}

TEST_CASE("fixed-point difficulty encoding") {
  CHECK(encode_difficulty(0.0) == 0u);
  CHECK(encode_difficulty(1.0) == 4294967295u);
  CHECK(decode_difficulty(encode_difficulty(1.0)) == 1.0);
  Rng rng = make_rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double d = uniform01(rng);
    REQUIRE(std::abs(decode_difficulty(encode_difficulty(d)) - d) <= 0.5 / 4294967295.0 + 1e-16);
  }
}
