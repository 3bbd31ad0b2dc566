#include <doctest.h>

#include <bit>
#include <sstream>

#include "hexmem/errors.hpp"
#include "hexmem/random.hpp"
#include "hexmem/taskmodel.hpp"
#include "oracles.hpp"

using namespace hexmem;

namespace {

std::vector<int> random_targets(Rng& rng, int n, int cells = 36) {
  std::vector<int> pool(cells);
  for (int i = 0; i < cells; ++i) pool[i] = i;
  shuffle(pool.begin(), pool.end(), rng);
  pool.resize(n);
  std::sort(pool.begin(), pool.end());
  return pool;
}

const DifficultyModel& default_model() {
  static const DifficultyModel model;
  return model;
}

}  // namespace

TEST_CASE("task construction validates targets") {
  CHECK_NOTHROW(MemoryTask({0, 1, 2, 3}));
  CHECK_THROWS_AS(MemoryTask({0, 1, 2}), DomainError);
  CHECK_THROWS_AS(MemoryTask({0, 1, 2, 2}), DomainError);
  CHECK_THROWS_AS(MemoryTask({0, 1, 2, 36}), DomainError);
  CHECK_THROWS_AS(MemoryTask({0, 1, 2, -1}), DomainError);
  std::vector<int> fifteen(15);
  for (int i = 0; i < 15; ++i) fifteen[i] = i;
  CHECK_THROWS_AS(MemoryTask{fifteen}, DomainError);
}

TEST_CASE("task parse, format and mask round trip") {
  const MemoryTask t = MemoryTask::parse(" 14, 0,5 ,9");
  CHECK(t.targets() == std::vector<int>{0, 5, 9, 14});
  CHECK(t.to_string() == "0,5,9,14");
  CHECK(t.mask() == ((1ULL << 0) | (1ULL << 5) | (1ULL << 9) | (1ULL << 14)));
  CHECK(MemoryTask::from_mask(t.mask()) == t);
  CHECK(t.contains(9));
  CHECK_FALSE(t.contains(10));
  CHECK_THROWS_AS(MemoryTask::parse("0,5,x,9"), DomainError);
  CHECK_THROWS_AS(MemoryTask::parse(""), DomainError);
}

TEST_CASE("component counter matches flood-fill oracle on 1000 tasks") {
  HexGrid grid;
  Rng rng = make_rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const int n = 4 + static_cast<int>(uniform_index(rng, 11));
    const auto targets = random_targets(rng, n);
    const MemoryTask task(targets);
    REQUIRE(count_components(grid, task.mask()) ==
            oracle::flood_fill_components(targets, 6, 6));
  }
}

TEST_CASE("features match the oracle on a fixture task") {
  // 0-1 and 1-7 touch (0 and 7 do not); 35 sits alone in the far corner.
  const std::vector<int> cells{0, 1, 7, 35};
  const auto expected = oracle::features(cells);
  CHECK(expected.n_c == 2);
  const auto got = default_model().features(MemoryTask(cells));
  CHECK(got.target_count == 4);
  CHECK(got.component_count == expected.n_c);
  CHECK(got.distribution_raw == expected.d_raw);
  CHECK(got.targets == doctest::Approx(0.0));
  CHECK(got.components == doctest::Approx(1.0 / 13.0).epsilon(1e-15));
  CHECK(got.distribution == doctest::Approx(expected.f_d).epsilon(1e-15));
  // 0-1: 0, 0-7: 1, 1-7: 0, 0-35: 7, 1-35: 6, 7-35: 5 intermediates.
  CHECK(expected.d_raw == 19);
}

TEST_CASE("features match the oracle on random tasks") {
  Rng rng = make_rng(7);
  for (int i = 0; i < 300; ++i) {
    const auto targets = random_targets(rng, 4 + static_cast<int>(uniform_index(rng, 11)));
    const auto expected = oracle::features(targets);
    const auto got = default_model().features(MemoryTask(targets));
    REQUIRE(got.component_count == expected.n_c);
    REQUIRE(got.distribution_raw == expected.d_raw);
    REQUIRE(got.distribution == doctest::Approx(expected.f_d).epsilon(1e-14));
  }
}

TEST_CASE("single-feature weights hit the extremes") {
  const DifficultyModel targets_only(HexGrid(), DifficultyWeights{1.0, 0.0, 0.0});
  CHECK(targets_only.difficulty(MemoryTask({0, 1, 2, 3})) == 0.0);
  CHECK(targets_only.difficulty(MemoryTask({0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26})) ==
        doctest::Approx(1.0));
}

TEST_CASE("weights must be nonnegative and sum to one") {
  CHECK_NOTHROW(DifficultyWeights{}.validate());
  CHECK_THROWS_AS((DifficultyWeights{0.5, 0.5, 0.5}.validate()), ConfigError);
  CHECK_THROWS_AS((DifficultyWeights{1.5, -0.5, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS(DifficultyModel(HexGrid(), DifficultyWeights{0.2, 0.2, 0.2}), ConfigError);
}

TEST_CASE("calibration for four targets equals exhaustive enumeration") {
  const auto& model = default_model();
  double lo = 1e9, hi = -1e9;
  std::vector<int> t(4);
  for (t[0] = 0; t[0] < 36; ++t[0])
    for (t[1] = t[0] + 1; t[1] < 36; ++t[1])
      for (t[2] = t[1] + 1; t[2] < 36; ++t[2])
        for (t[3] = t[2] + 1; t[3] < 36; ++t[3]) {
          const auto f = oracle::features(t);
          const double v = (f.f_t + f.f_c + f.f_d) / 3.0;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
  CHECK(model.calibration().stratum_low[0] == doctest::Approx(lo).epsilon(1e-12));
  CHECK(model.calibration().stratum_high[0] == doctest::Approx(hi).epsilon(1e-12));
  CHECK(model.calibration().low == doctest::Approx(lo).epsilon(1e-12));
  CHECK(model.normalize(lo) == 0.0);
}

TEST_CASE("difficulty stays in [0, 1] over 1e5 random tasks") {
  const auto& model = default_model();
  Rng rng = make_rng(99);
  double seen_lo = 1.0, seen_hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    CellMask mask = 0;
    const int n = 4 + static_cast<int>(uniform_index(rng, 11));
    while (std::popcount(mask) < n) mask |= CellMask{1} << uniform_index(rng, 36);
    const double d = model.difficulty(MemoryTask::from_mask(mask));
    REQUIRE(d >= 0.0);
    REQUIRE(d <= 1.0);
    seen_lo = std::min(seen_lo, d);
    seen_hi = std::max(seen_hi, d);
  }
  CHECK(seen_lo < 0.1);
  CHECK(seen_hi > 0.8);
}

TEST_CASE("adding an isolated target increases difficulty") {
  const auto& model = default_model();
  HexGrid grid;
  Rng rng = make_rng(5);
  int checked = 0;
  while (checked < 1000) {
    const auto targets = random_targets(rng, 4 + static_cast<int>(uniform_index(rng, 10)));
    const MemoryTask task(targets);
    CellMask blocked = task.mask();
    for (int c : targets) blocked |= grid.neighbor_mask(c);
    std::vector<int> free;
    for (int c = 0; c < 36; ++c) {
      if (!((blocked >> c) & 1)) free.push_back(c);
    }
    if (free.empty()) continue;
    auto bigger = targets;
    bigger.push_back(free[uniform_index(rng, free.size())]);
    const MemoryTask grown(bigger);
    const auto f0 = model.features(task);
    const auto f1 = model.features(grown);
    REQUIRE(f1.targets > f0.targets);
    REQUIRE(f1.component_count == f0.component_count + 1);
    REQUIRE(linear_difficulty(f1, model.weights()) > linear_difficulty(f0, model.weights()));
    REQUIRE(model.difficulty(grown) >= model.difficulty(task));
    ++checked;
  }
}

TEST_CASE("difficulty is invariant under the half-turn automorphism") {
  const auto& model = default_model();
  HexGrid grid;
  Rng rng = make_rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto targets = random_targets(rng, 4 + static_cast<int>(uniform_index(rng, 11)));
    std::vector<int> rotated;
    for (int c : targets) rotated.push_back(grid.rotate_half_turn(c));
    REQUIRE(model.difficulty(MemoryTask(targets)) == model.difficulty(MemoryTask(rotated)));
  }
}

TEST_CASE("scoring a trial") {
  const MemoryTask task({1, 3, 5, 7, 9, 11, 13, 15});
  SUBCASE("seven of eight") {
    const std::vector<int> clicks{1, 3, 5, 7, 9, 11, 13, 16};
    const auto out = score_trial(task, clicks);
    CHECK(out.correct == 7);
    CHECK(out.score == 0.875);
    CHECK_FALSE(out.win);
    CHECK(out.hits == std::vector<bool>{true, true, true, true, true, true, true, false});
  }
  SUBCASE("perfect recall wins") {
    const auto out = score_trial(task, task.targets());
    CHECK(out.score == 1.0);
    CHECK(out.win);
  }
  SUBCASE("total miss") {
    const std::vector<int> clicks{0, 2, 4, 6, 8, 10, 12, 14};
    CHECK(score_trial(task, clicks).score == 0.0);
  }
  SUBCASE("protocol violations") {
    const std::vector<int> short_clicks{1, 3, 5};
    const std::vector<int> duplicate{1, 1, 5, 7, 9, 11, 13, 15};
    const std::vector<int> outside{1, 3, 5, 7, 9, 11, 13, 36};
    CHECK_THROWS_AS(score_trial(task, short_clicks), ProtocolError);
    CHECK_THROWS_AS(score_trial(task, duplicate), ProtocolError);
    CHECK_THROWS_AS(score_trial(task, outside), ProtocolError);
  }
}

TEST_CASE("score is a multiple of 1/n_t within [0, 1]") {
  Rng rng = make_rng(3);
  for (int i = 0; i < 500; ++i) {
    const int n = 4 + static_cast<int>(uniform_index(rng, 11));
    const MemoryTask task(random_targets(rng, n));
    const auto clicks = random_targets(rng, n);
    const auto out = score_trial(task, clicks);
    REQUIRE(out.score >= 0.0);
    REQUIRE(out.score <= 1.0);
    REQUIRE(out.score * n == doctest::Approx(static_cast<double>(out.correct)));
  }
}

TEST_CASE("task fixture round trip") {
  std::istringstream in("# fixture\n0,5,9,14\n\n  3, 1, 2, 4\n");
  const auto tasks = read_task_fixture(in);
  REQUIRE(tasks.size() == 2);
  CHECK(tasks[1].to_string() == "1,2,3,4");
  std::ostringstream out;
  write_task_fixture(out, tasks);
  CHECK(out.str() == "0,5,9,14\n1,2,3,4\n");
  std::istringstream bad("0,5,9\n");
  CHECK_THROWS(read_task_fixture(bad));
}

TEST_CASE("fingerprint identifies the metric") {
  const DifficultyModel a;
  const DifficultyModel b;
  const DifficultyModel c(HexGrid(), DifficultyWeights{0.5, 0.25, 0.25});
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.fingerprint() != c.fingerprint());
}
