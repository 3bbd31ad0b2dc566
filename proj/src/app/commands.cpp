#include "hexmem/app/commands.hpp"

#include <chrono>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "hexmem/errors.hpp"
#include "hexmem/experiment.hpp"
#include "hexmem/rl/train.hpp"

namespace hexmem::app {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_curve(const std::filesystem::path& path, const std::vector<rl::CurvePoint>& curve) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError("cannot write " + path.string());
  rl::write_curve_csv(f, curve);
}

}  // namespace

TaskDatabase open_database(const DifficultyModel& model,
                           const std::optional<std::filesystem::path>& path) {
  if (path) return TaskDatabase::load(*path, model.fingerprint());
  return TaskDatabase::build(model, {});
}

void ddb_build(const DdbBuildArgs& args, std::ostream& out) {
  if (args.out.empty()) throw ConfigError("ddb build needs an output file");
  const auto start = std::chrono::steady_clock::now();
  const DifficultyModel model;
  BuildOptions options;
  options.per_stratum = args.per_stratum;
  options.seed = args.seed;
  options.targeted_fraction = args.targeted_fraction;
  const TaskDatabase db = TaskDatabase::build(model, options);
  db.save(args.out);
  out << fmt::format("built {} tasks ({} per target count) in {:.2f} s -> {}\n", db.size(),
                     args.per_stratum, seconds_since(start), args.out.string());
}

void ddb_query(const DdbQueryArgs& args, std::ostream& out) {
  const DifficultyModel model;
  const TaskDatabase db = open_database(model, args.db);
  Rng rng = make_rng(args.seed);
  const DatabaseEntry e = db.lookup(args.difficulty, ExclusionWindow(0), rng);
  const MemoryTask task = MemoryTask::from_mask(e.id);
  out << fmt::format("cells={} n_t={} difficulty={:.6f} gap={:.6f}\n", task.to_string(),
                     task.size(), e.difficulty, std::abs(e.difficulty - args.difficulty));
}

void task_difficulty(const std::string& cells, std::ostream& out) {
  const DifficultyModel model;
  const MemoryTask task = MemoryTask::parse(cells, model.grid().cell_count());
  const TaskFeatures f = model.features(task);
  out << fmt::format("n_t={} n_c={} d={} difficulty={:.6f}\n", f.target_count, f.component_count,
                     f.distribution_raw, model.difficulty(f));
}

void train(const TrainArgs& args, std::ostream& out) {
  if (args.out.empty()) throw ConfigError("train needs an output checkpoint");
  const auto start = std::chrono::steady_clock::now();
  const DifficultyModel model;
  const TaskDatabase db = open_database(model, args.db);

  std::vector<SimPlayer> players;
  if (args.ability) {
    PlayerParams p;
    p.ability = *args.ability;
    players.emplace_back(p, derive_seed(args.seed, 0x91a7e5));
  } else {
    CohortSpec spec;
    spec.size = args.cohort;
    spec.ability_low = args.ability_low;
    spec.ability_high = args.ability_high;
    spec.seed = args.seed;
    players = make_cohort(spec);
  }

  rl::TrainConfig config;
  config.total_steps = args.steps;
  config.seed = args.seed;
  config.env.reward.kind = args.reward;
  const rl::TrainResult result = rl::train(model, db, players, config);
  rl::save_checkpoint(args.out, result.params, config.ppo);
  if (args.curve) write_curve(*args.curve, result.curve);

  out << fmt::format("trained {} steps ({} updates, reward {}) in {:.1f} s -> {}\n", args.steps,
                     result.curve.size(), rl::to_string(args.reward), seconds_since(start),
                     args.out.string());
  if (!result.curve.empty()) {
    out << fmt::format("final mean reward {:.4f}\n", result.curve.back().mean_reward);
  }
  if (args.ability && args.eval_trials > 0) {
    const auto eval = rl::evaluate_policy(result.params, model, db, players.front(), config.env,
                                          args.eval_trials, derive_seed(args.seed, 0xe7a1));
    out << fmt::format("evaluation over {} trials: mean score {:.4f}, mean difficulty {:.4f}\n",
                       eval.trials, eval.mean_score, eval.mean_difficulty);
  }
}

void fine_tune(const FineTuneArgs& args, std::ostream& out) {
  if (args.policy.empty()) throw ConfigError("fine-tuning needs a base policy (--policy)");
  if (args.out.empty()) throw ConfigError("fine-tuning needs an output checkpoint (--out)");
  const rl::Checkpoint base = rl::load_checkpoint(args.policy);
  const std::vector<SessionLog> logs = read_session_logs(args.logs);
  rl::RewardSpec reward;
  reward.kind = args.reward;
  const rl::FineTuneResult result =
      rl::fine_tune_from_logs(base.params, logs, base.config, reward, args.seed);
  rl::save_checkpoint(args.out, result.params, base.config);
  out << fmt::format("fine-tuned on {} samples from {} session logs -> {}\n", result.samples,
                     logs.size(), args.out.string());
  if (result.metrics) {
    out << fmt::format("approx kl {:.3e}, clip fraction {:.4f}\n", result.metrics->approx_kl,
                       result.metrics->clip_fraction);
  }
}

void simulate(const SimulateArgs& args, std::ostream& out) {
  if (args.out.empty()) throw ConfigError("simulate needs an output directory");
  if (args.methods.empty()) throw ConfigError("simulate needs at least one method");
  const auto start = std::chrono::steady_clock::now();
  const DifficultyModel model;
  const TaskDatabase db = open_database(model, args.db);
  std::filesystem::create_directories(args.out);

  CohortSpec spec;
  spec.size = args.cohort;
  spec.ability_low = args.ability_low;
  spec.ability_high = args.ability_high;
  spec.seed = args.seed;
  spec.base.fatigue_rate = args.fatigue;
  spec.base.learning_rate = args.learning;
  const std::vector<SimPlayer> cohort = make_cohort(spec);

  rl::RewardSpec reward;
  reward.kind = args.reward;

  std::shared_ptr<const rl::PolicyParams> policy;
  const bool needs_policy = std::find(args.methods.begin(), args.methods.end(),
                                      ControllerKind::kRl) != args.methods.end();
  if (needs_policy && args.policy) {
    policy = std::make_shared<const rl::PolicyParams>(rl::load_checkpoint(*args.policy).params);
  } else if (needs_policy) {
    CohortSpec train_spec = spec;
    train_spec.base = PlayerParams{};
    train_spec.seed = derive_seed(args.seed, 0x7a1);
    const auto train_cohort = make_cohort(train_spec);
    rl::TrainConfig config;
    config.total_steps = args.train_steps;
    config.seed = derive_seed(args.seed, 0x7a2);
    config.env.reward = reward;
    out << fmt::format("training rl policy for {} steps\n", args.train_steps) << std::flush;
    policy = std::make_shared<const rl::PolicyParams>(
        rl::train(model, db, train_cohort, config).params);
    rl::save_checkpoint(args.out / "policy.ckpt", *policy, config.ppo);
  }

  ExperimentOptions options;
  options.trials = args.trials;
  options.seed = args.seed;
  options.reward = reward;
  options.keep_sessions = args.write_sessions;
  const ExperimentReport report =
      run_cohort_experiment(args.methods, cohort, db, model, policy, options);
  write_report(report, args.out);

  out << fmt::format("{} players x {} methods x {} trials in {:.1f} s -> {}\n", cohort.size(),
                     args.methods.size(), args.trials, seconds_since(start), args.out.string());
  for (ControllerKind m : args.methods) {
    out << fmt::format("  {:6} mean score {:.4f}  win rate {:.4f}  mean decline {:+.4f}\n",
                       to_string(m), report.mean_score(m), report.win_rate(m),
                       report.mean_decline(m));
  }
  for (const auto& t : report.tests) {
    out << fmt::format("  {:7} {} vs {}: t = {:+.3f} (df {})\n", t.factor, to_string(t.first),
                       to_string(t.second), t.test.t, t.test.df);
  }
}

std::vector<ControllerKind> parse_methods(const std::string& list) {
  std::vector<ControllerKind> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(' ');
    if (first == std::string::npos) continue;
    const auto kind = parse_controller_kind(item.substr(first, item.find_last_not_of(' ') - first + 1));
    if (std::find(out.begin(), out.end(), kind) != out.end()) {
      throw ConfigError("method " + to_string(kind) + " listed twice");
    }
    out.push_back(kind);
  }
  if (out.empty()) throw ConfigError("empty method list");
  return out;
}

}  // namespace hexmem::app
