// hexmem: database, training, simulation and session-server front end.

#include <iostream>

#include <CLI11.hpp>

#include "hexmem/app/commands.hpp"
#include "hexmem/app/config.hpp"
#include "hexmem/app/http_api.hpp"
#include "hexmem/errors.hpp"

namespace {

using namespace hexmem;

rl::RewardKind reward_option(const std::string& name) { return rl::parse_reward_kind(name); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Adaptive hex-grid visual working memory game: tools and session server"};
  cli.require_subcommand(1);

  // ddb
  auto* ddb = cli.add_subcommand("ddb", "Difficulty database");
  ddb->require_subcommand(1);
  app::DdbBuildArgs build;
  auto* ddb_build = ddb->add_subcommand("build", "Build and save a database");
  ddb_build->add_option("--per-stratum", build.per_stratum, "Tasks per target count")
      ->capture_default_str();
  ddb_build->add_option("--seed", build.seed, "Random seed")->capture_default_str();
  ddb_build->add_option("--targeted-fraction", build.targeted_fraction,
                        "Share of each stratum filled by difficulty-targeted search")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  ddb_build->add_option("--out", build.out, "Output file")->required();

  app::DdbQueryArgs query;
  std::string query_db;
  auto* ddb_query = ddb->add_subcommand("query", "Retrieve a task near a difficulty");
  ddb_query->add_option("--difficulty", query.difficulty, "Target difficulty in [0, 1]")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  ddb_query->add_option("--db", query_db, "Database file (default: build one in memory)");
  ddb_query->add_option("--seed", query.seed, "Tie-breaking seed")->capture_default_str();

  // task
  auto* task = cli.add_subcommand("task", "Memory task inspection");
  task->require_subcommand(1);
  std::string cells;
  auto* task_difficulty = task->add_subcommand("difficulty", "Features and difficulty of a task");
  task_difficulty->add_option("--cells", cells, "Comma-separated target cells, e.g. 0,5,9,14")
      ->required();

  // train
  auto* train = cli.add_subcommand("train", "Train a policy, or fine-tune one from session logs");
  app::TrainArgs train_args;
  app::FineTuneArgs tune_args;
  std::string reward = "r1";
  std::string train_db;
  std::string curve;
  std::string from_logs;
  std::string base_policy;
  double ability = -1.0;
  train->add_option("--reward", reward, "Reward function: r1, r2 or r3")->capture_default_str();
  train->add_option("--steps", train_args.steps, "Environment steps")->capture_default_str();
  train->add_option("--seed", train_args.seed, "Random seed")->capture_default_str();
  train->add_option("--out", train_args.out, "Output checkpoint")->required();
  train->add_option("--curve", curve, "Write the training curve CSV here");
  train->add_option("--db", train_db, "Database file (default: build one in memory)");
  train->add_option("--ability", ability, "Train against a single player of this ability")
      ->check(CLI::Range(0.0, 1.0));
  train->add_option("--cohort", train_args.cohort, "Cohort size when no ability is given")
      ->capture_default_str();
  train->add_option("--from-logs", from_logs, "Fine-tune on the session logs in this directory");
  train->add_option("--policy", base_policy, "Base checkpoint for --from-logs");

  // simulate
  auto* simulate = cli.add_subcommand("simulate", "Cohort experiment on simulated players");
  app::SimulateArgs sim;
  std::string methods = "rl,rule1,rule2";
  std::string sim_reward = "r1";
  std::string sim_policy;
  std::string sim_db;
  bool no_sessions = false;
  simulate->add_option("--cohort", sim.cohort, "Number of players")->capture_default_str();
  simulate->add_option("--methods", methods, "Comma-separated methods")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Report directory")->required();
  simulate->add_option("--policy", sim_policy, "Checkpoint for the rl method (default: train one)");
  simulate->add_option("--train-steps", sim.train_steps, "Steps when training a policy")
      ->capture_default_str();
  simulate->add_option("--db", sim_db, "Database file (default: build one in memory)");
  simulate->add_option("--trials", sim.trials, "Trials per session")->capture_default_str();
  simulate->add_option("--fatigue", sim.fatigue, "Ability loss per trial")->capture_default_str();
  simulate->add_option("--learning", sim.learning, "Ability gain per trial")->capture_default_str();
  simulate->add_option("--ability-low", sim.ability_low)->capture_default_str();
  simulate->add_option("--ability-high", sim.ability_high)->capture_default_str();
  simulate->add_option("--reward", sim_reward, "Reward recorded in the logs")->capture_default_str();
  simulate->add_flag("--no-sessions", no_sessions, "Skip the per-session logs");

  // serve
  auto* serve = cli.add_subcommand("serve", "Run the HTTP session service");
  std::string config_path;
  serve->add_option("--config", config_path, "Key-value config file")->required();

  CLI11_PARSE(cli, argc, argv);

  try {
    if (*ddb_build) {
      app::ddb_build(build, std::cout);
    } else if (*ddb_query) {
      if (!query_db.empty()) query.db = query_db;
      app::ddb_query(query, std::cout);
    } else if (*task_difficulty) {
      app::task_difficulty(cells, std::cout);
    } else if (*train) {
      if (!from_logs.empty()) {
        tune_args.logs = from_logs;
        tune_args.policy = base_policy;
        tune_args.out = train_args.out;
        tune_args.reward = reward_option(reward);
        tune_args.seed = train_args.seed;
        app::fine_tune(tune_args, std::cout);
      } else {
        train_args.reward = reward_option(reward);
        if (!curve.empty()) train_args.curve = curve;
        if (!train_db.empty()) train_args.db = train_db;
        if (ability >= 0.0) train_args.ability = ability;
        app::train(train_args, std::cout);
      }
    } else if (*simulate) {
      sim.methods = app::parse_methods(methods);
      sim.reward = reward_option(sim_reward);
      if (!sim_policy.empty()) sim.policy = sim_policy;
      if (!sim_db.empty()) sim.db = sim_db;
      sim.write_sessions = !no_sessions;
      app::simulate(sim, std::cout);
    } else if (*serve) {
      app::serve(app::load_config(config_path), std::cerr);
    }
  } catch (const hexmem::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
