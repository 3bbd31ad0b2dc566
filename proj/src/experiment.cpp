#include "hexmem/experiment.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "hexmem/errors.hpp"

namespace hexmem {

SessionLog run_session(const Controller& controller, SimPlayer& player,
                       const TaskDatabase& db, const DifficultyModel& model,
                       const SessionOptions& options, bool keep_player_stream) {
  if (options.trials < 1) throw DomainError("a session needs at least one trial");
  if (!keep_player_stream) player.reseed(derive_seed(options.seed, 0x91a));
  Rng task_rng = make_rng(options.seed, 0x7a5c);
  const int cells = model.grid().cell_count();

  SessionLog log;
  log.method = to_string(controller.kind());
  log.player_id = "p" + std::to_string(player.id());
  log.session_id = log.method + "-" + log.player_id;
  log.seed = options.seed;

  ControllerState state = controller.init();
  for (int trial = 1; trial <= options.trials; ++trial) {
    TrialRecord rec;
    rec.trial = trial;
    if (controller.kind() == ControllerKind::kRule1) {
      rec.requested_targets = state.target_count;
    } else {
      rec.requested_difficulty = state.difficulty;
    }
    rec.raw_action = state.raw_action;
    rec.log_prob = state.log_prob;

    const SelectedTask selected = controller.select_task(state, db, model, task_rng);
    const TrialOutcome outcome =
        player.respond(selected.task, selected.difficulty, trial - 1, cells);
    rec.targets = selected.task.targets();
    rec.actual_difficulty = selected.difficulty;
    rec.clicks = outcome.clicks;
    rec.hits = outcome.hits;
    rec.correct = outcome.correct;
    rec.score = outcome.score;
    rec.win = outcome.win;
    rec.reward = rl::reward(options.reward, outcome.score, selected.difficulty);
    log.trials.push_back(std::move(rec));

    if (trial < options.trials) controller.next_difficulty(state, outcome.score);
  }
  return log;
}

std::size_t ExperimentReport::method_index(ControllerKind kind) const {
  const auto it = std::find(methods.begin(), methods.end(), kind);
  if (it == methods.end()) throw DomainError("method " + to_string(kind) + " not in report");
  return static_cast<std::size_t>(it - methods.begin());
}

double ExperimentReport::mean_score(ControllerKind kind) const {
  return stats::mean(avg_subject[method_index(kind)]);
}

double ExperimentReport::win_rate(ControllerKind kind) const {
  return stats::mean(win_rate_subject[method_index(kind)]);
}

std::vector<double> ExperimentReport::decline_values(ControllerKind kind) const {
  const auto& d = decline[method_index(kind)];
  std::vector<double> out;
  out.reserve(d.size());
  for (const auto& r : d) out.push_back(r.value_or(0.0));
  return out;
}

double ExperimentReport::mean_decline(ControllerKind kind) const {
  return stats::mean(decline_values(kind));
}

const PairedComparison* ExperimentReport::find_test(const std::string& factor,
                                                    ControllerKind a,
                                                    ControllerKind b) const {
  for (const auto& t : tests) {
    if (t.factor == factor && t.first == a && t.second == b) return &t;
  }
  return nullptr;
}

ExperimentReport run_cohort_experiment(std::span<const ControllerKind> methods,
                                       std::span<const SimPlayer> cohort,
                                       const TaskDatabase& db, const DifficultyModel& model,
                                       std::shared_ptr<const rl::PolicyParams> policy,
                                       const ExperimentOptions& options) {
  if (cohort.empty()) throw DomainError("experiment needs a nonempty cohort");
  if (methods.empty()) throw DomainError("experiment needs at least one method");

  ExperimentReport report;
  report.methods.assign(methods.begin(), methods.end());
  const std::size_t n_methods = methods.size();
  const std::size_t n_players = cohort.size();
  const auto n_trials = static_cast<std::size_t>(options.trials);

  std::vector<Controller> controllers;
  for (ControllerKind kind : methods) {
    controllers.emplace_back(kind, options.controller,
                             kind == ControllerKind::kRl ? policy : nullptr);
  }

  report.avg_subject.assign(n_methods, std::vector<double>(n_players, 0.0));
  report.win_rate_subject.assign(n_methods, std::vector<double>(n_players, 0.0));
  report.decline.assign(n_methods, std::vector<std::optional<double>>(n_players));
  report.avg_trial.assign(n_methods, std::vector<double>(n_trials, 0.0));
  report.avg_trial_difficulty.assign(n_methods, std::vector<double>(n_trials, 0.0));

  std::vector<double> trial_numbers(n_trials);
  for (std::size_t t = 0; t < n_trials; ++t) trial_numbers[t] = static_cast<double>(t + 1);

  for (std::size_t i = 0; i < n_players; ++i) {
    SimPlayer player = cohort[i];
    report.player_ids.push_back(player.id());
    report.abilities.push_back(player.params().ability);
    player.reseed(derive_seed(options.seed, 0x5eed0000 + i));

    std::vector<std::size_t> order(n_methods);
    for (std::size_t m = 0; m < n_methods; ++m) order[m] = m;
    Rng order_rng = make_rng(options.seed, 0x0dde0000 + i);
    shuffle(order.begin(), order.end(), order_rng);

    for (std::size_t m : order) {
      SessionOptions session;
      session.trials = options.trials;
      session.seed = derive_seed(options.seed, (i << 8) | m);
      session.reward = options.reward;
      SessionLog log = run_session(controllers[m], player, db, model, session, true);

      std::vector<double> scores;
      for (std::size_t t = 0; t < log.trials.size(); ++t) {
        scores.push_back(log.trials[t].score);
        report.avg_trial[m][t] += log.trials[t].score / static_cast<double>(n_players);
        report.avg_trial_difficulty[m][t] +=
            log.trials[t].actual_difficulty / static_cast<double>(n_players);
      }
      report.avg_subject[m][i] = log.mean_score();
      report.win_rate_subject[m][i] = log.win_rate();
      report.decline[m][i] =
          n_trials >= 2 ? stats::pearson_r(trial_numbers, scores) : std::nullopt;
      if (options.keep_sessions) report.sessions.push_back(std::move(log));
    }
  }

  if (n_players >= 2) {
    for (std::size_t a = 0; a < n_methods; ++a) {
      for (std::size_t b = a + 1; b < n_methods; ++b) {
        report.tests.push_back({"score", methods[a], methods[b],
                                stats::paired_t_test(report.avg_subject[a],
                                                     report.avg_subject[b])});
      }
    }
    for (std::size_t a = 0; a < n_methods; ++a) {
      for (std::size_t b = a + 1; b < n_methods; ++b) {
        report.tests.push_back({"decline", methods[a], methods[b],
                                stats::paired_t_test(report.decline_values(methods[a]),
                                                     report.decline_values(methods[b]))});
      }
    }
  }
  return report;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

std::string number(double v) { return fmt::format("{:.6f}", v); }

}  // namespace

void write_report(const ExperimentReport& report, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  const std::size_t n_methods = report.methods.size();

  {
    auto out = open_csv(directory / "avg_subject_method.csv");
    out << "player_id,ability";
    for (auto m : report.methods) out << ',' << to_string(m);
    out << '\n';
    for (std::size_t i = 0; i < report.player_ids.size(); ++i) {
      out << report.player_ids[i] << ',' << number(report.abilities[i]);
      for (std::size_t m = 0; m < n_methods; ++m) out << ',' << number(report.avg_subject[m][i]);
      out << '\n';
    }
  }
  {
    auto out = open_csv(directory / "avg_trial_method.csv");
    out << "trial";
    for (auto m : report.methods) out << ",score_" << to_string(m);
    for (auto m : report.methods) out << ",difficulty_" << to_string(m);
    out << '\n';
    const std::size_t n_trials = n_methods > 0 ? report.avg_trial[0].size() : 0;
    for (std::size_t t = 0; t < n_trials; ++t) {
      out << t + 1;
      for (std::size_t m = 0; m < n_methods; ++m) out << ',' << number(report.avg_trial[m][t]);
      for (std::size_t m = 0; m < n_methods; ++m) {
        out << ',' << number(report.avg_trial_difficulty[m][t]);
      }
      out << '\n';
    }
  }
  {
    auto out = open_csv(directory / "decline.csv");
    out << "player_id";
    for (auto m : report.methods) out << ',' << to_string(m);
    out << '\n';
    for (std::size_t i = 0; i < report.player_ids.size(); ++i) {
      out << report.player_ids[i];
      for (std::size_t m = 0; m < n_methods; ++m) {
        out << ',';
        if (report.decline[m][i]) out << number(*report.decline[m][i]);
      }
      out << '\n';
    }
  }
  {
    auto out = open_csv(directory / "tests.csv");
    out << "factor,first,second,t,df\n";
    for (const auto& t : report.tests) {
      out << t.factor << ',' << to_string(t.first) << ',' << to_string(t.second) << ','
          << number(t.test.t) << ',' << t.test.df << '\n';
    }
  }
  {
    auto out = open_csv(directory / "summary.csv");
    out << "method,mean_score,win_rate,mean_decline\n";
    for (auto m : report.methods) {
      out << to_string(m) << ',' << number(report.mean_score(m)) << ','
          << number(report.win_rate(m)) << ',' << number(report.mean_decline(m)) << '\n';
    }
  }
  if (!report.sessions.empty()) {
    const auto dir = directory / "sessions";
    std::filesystem::create_directories(dir);
    for (const auto& log : report.sessions) {
      std::ofstream out(dir / (log.session_id + ".jsonl"), std::ios::trunc);
      if (!out) throw FormatError("cannot write session log " + log.session_id);
      write_session_log(out, log);
    }
  }
}

}  // namespace hexmem
