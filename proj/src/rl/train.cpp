#include "hexmem/rl/train.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "hexmem/errors.hpp"

namespace hexmem::rl {

TrainResult train(const DifficultyModel& model, const TaskDatabase& db,
                  std::span<const SimPlayer> cohort, const TrainConfig& config,
                  const PolicyParams* initial) {
  config.ppo.validate();
  if (cohort.empty()) throw DomainError("training needs at least one simulated player");
  if (db.empty()) throw StateError("training needs a populated task database");

  TrainResult result{initial != nullptr
                         ? *initial
                         : PolicyParams::initialize(derive_seed(config.seed, 1), config.shape,
                                                    config.initial_log_std),
                     {}};
  if (config.total_steps == 0) return result;
  PolicyParams& params = result.params;

  AdamOptimizer optimizer(params.size());
  Rng episode_rng = make_rng(config.seed, 2);
  Rng action_rng = make_rng(config.seed, 3);
  Rng shuffle_rng = make_rng(config.seed, 4);

  DdaEnvironment env(model, db, config.env);
  std::optional<SimPlayer> player;
  const int cells = model.grid().cell_count();
  auto begin_episode = [&] {
    player = cohort[uniform_index(episode_rng, cohort.size())];
    player->reseed(episode_rng());
    env.reset(
        [&player, cells](const MemoryTask& task, double difficulty, int trial_index) {
          return player->respond(task, difficulty, trial_index, cells);
        },
        episode_rng());
  };
  begin_episode();

  std::uint64_t steps = 0;
  int update = 0;
  Trajectory trajectory;
  while (steps < config.total_steps) {
    const auto length = static_cast<std::size_t>(std::min<std::uint64_t>(
        static_cast<std::uint64_t>(config.ppo.rollout_length), config.total_steps - steps));
    trajectory.clear();
    double reward_sum = 0.0;
    for (std::size_t i = 0; i < length; ++i) {
      const RLState state = env.state();
      const ActionSample a = act(params, state, ActMode::kStochastic, &action_rng);
      const double value = state_value(params, state);
      const StepResult r = env.step(a.action);
      trajectory.push_back(Transition{state, a.raw, a.action, a.log_prob, r.reward, value, r.done});
      reward_sum += r.reward;
      if (r.done) begin_episode();
    }
    steps += length;

    const double bootstrap = trajectory.back().done ? 0.0 : state_value(params, env.state());
    const auto estimate = gae(trajectory, bootstrap, config.ppo.gamma, config.ppo.lambda);
    const auto samples = make_samples(trajectory, estimate);
    PPOConfig cfg = config.ppo;
    cfg.minibatch_size = std::min<int>(cfg.minibatch_size, static_cast<int>(samples.size()));
    const UpdateMetrics m = ppo_update(params, optimizer, samples, cfg, shuffle_rng);

    result.curve.push_back(CurvePoint{update, steps, reward_sum / static_cast<double>(length),
                                      m.approx_kl, m.clip_fraction});
    ++update;
    if (config.checkpoint_path) save_checkpoint(*config.checkpoint_path, params, config.ppo);
  }
  return result;
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve) {
  out << "update,steps,mean_reward,approx_kl,clip_fraction\n";
  for (const auto& p : curve) {
    out << fmt::format("{},{},{:.6f},{:.8f},{:.6f}\n", p.update, p.steps, p.mean_reward,
                       p.approx_kl, p.clip_fraction);
  }
}

EvaluationResult evaluate_policy(const PolicyParams& params, const DifficultyModel& model,
                                 const TaskDatabase& db, const SimPlayer& player,
                                 const EnvConfig& env_config, int policy_trials,
                                 std::uint64_t seed) {
  EvaluationResult result;
  DdaEnvironment env(model, db, env_config);
  const int cells = model.grid().cell_count();
  for (std::uint64_t episode = 0; result.trials < policy_trials; ++episode) {
    SimPlayer p = player;
    p.reseed(derive_seed(seed, 2 * episode));
    env.reset(
        [&p, cells](const MemoryTask& task, double difficulty, int trial_index) {
          return p.respond(task, difficulty, trial_index, cells);
        },
        derive_seed(seed, 2 * episode + 1));
    if (env.done()) throw ConfigError("evaluation episodes must contain a policy trial");
    while (!env.done() && result.trials < policy_trials) {
      const ActionSample a = act(params, env.state(), ActMode::kDeterministic);
      const StepResult r = env.step(a.action);
      result.mean_score += r.trial.outcome.score;
      result.mean_difficulty += r.trial.actual_difficulty;
      result.mean_reward += r.reward;
      ++result.trials;
    }
  }
  result.mean_score /= result.trials;
  result.mean_difficulty /= result.trials;
  result.mean_reward /= result.trials;
  return result;
}

namespace {
constexpr char kCheckpointMagic[8] = {'H', 'E', 'X', 'M', 'P', 'O', 'L', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params,
                     const PPOConfig& cfg) {
  using namespace detail;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  const NetworkShape& shape = params.shape();
  put_u32(out, static_cast<std::uint32_t>(shape.inputs));
  put_u32(out, static_cast<std::uint32_t>(shape.hidden1));
  put_u32(out, static_cast<std::uint32_t>(shape.hidden2));
  put_f64(out, cfg.gamma);
  put_f64(out, cfg.lambda);
  put_f64(out, cfg.clip);
  put_f64(out, cfg.learning_rate);
  put_u32(out, static_cast<std::uint32_t>(cfg.epochs));
  put_u32(out, static_cast<std::uint32_t>(cfg.minibatch_size));
  put_u32(out, static_cast<std::uint32_t>(cfg.rollout_length));
  put_f64(out, cfg.entropy_coef);
  put_f64(out, cfg.value_coef);
  put_f64(out, cfg.max_grad_norm);
  put_u64(out, params.size());
  for (double v : params.flat()) put_f64(out, v);
  if (!out) throw FormatError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  using namespace detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + sizeof(magic), kCheckpointMagic)) {
    throw FormatError(path.string() + " is not a policy checkpoint");
  }
  if (const auto version = get_u32(in); version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  NetworkShape shape;
  shape.inputs = static_cast<int>(get_u32(in));
  shape.hidden1 = static_cast<int>(get_u32(in));
  shape.hidden2 = static_cast<int>(get_u32(in));
  if (shape.inputs != 2 || shape.hidden1 < 1 || shape.hidden2 < 1 || shape.hidden1 > 4096 ||
      shape.hidden2 > 4096) {
    throw FormatError("checkpoint has an unsupported network shape");
  }
  PPOConfig cfg;
  cfg.gamma = get_f64(in);
  cfg.lambda = get_f64(in);
  cfg.clip = get_f64(in);
  cfg.learning_rate = get_f64(in);
  cfg.epochs = static_cast<int>(get_u32(in));
  cfg.minibatch_size = static_cast<int>(get_u32(in));
  cfg.rollout_length = static_cast<int>(get_u32(in));
  cfg.entropy_coef = get_f64(in);
  cfg.value_coef = get_f64(in);
  cfg.max_grad_norm = get_f64(in);
  Checkpoint ckpt{PolicyParams(shape), cfg};
  if (get_u64(in) != ckpt.params.size()) {
    throw FormatError("checkpoint weight count does not match its network shape");
  }
  for (double& v : ckpt.params.flat()) v = get_f64(in);
  if (!ckpt.params.all_finite()) throw FormatError("checkpoint contains non-finite weights");
  return ckpt;
}

std::vector<Sample> samples_from_logs(const PolicyParams& params,
                                      std::span<const SessionLog> logs,
                                      const RewardSpec& reward_spec, const PPOConfig& cfg,
                                      int trials_per_session) {
  std::vector<Sample> samples;
  for (const SessionLog& log : logs) {
    if (log.method != "rl") continue;
    std::vector<TrialRecord> trials = log.trials;
    std::sort(trials.begin(), trials.end(),
              [](const TrialRecord& a, const TrialRecord& b) { return a.trial < b.trial; });
    if (trials.size() < 2) continue;

    Trajectory trajectory;
    for (std::size_t k = 1; k < trials.size(); ++k) {
      const TrialRecord& prev = trials[k - 1];
      const TrialRecord& cur = trials[k];
      if (!cur.raw_action || !cur.log_prob) {
        throw FormatError("session " + log.session_id + " trial " + std::to_string(cur.trial) +
                          " has no stored raw action / log probability; only sessions "
                          "recorded under the RL controller can be replayed");
      }
      const RLState state{prev.actual_difficulty, prev.score};
      Transition t;
      t.state = state;
      t.raw_action = *cur.raw_action;
      t.action = squash(*cur.raw_action);
      t.log_prob = *cur.log_prob;
      t.reward = reward(reward_spec, cur.score, cur.actual_difficulty);
      t.value = state_value(params, state);
      t.done = k + 1 == trials.size() && static_cast<int>(trials.size()) >= trials_per_session;
      trajectory.push_back(t);
    }
    const TrialRecord& last = trials.back();
    const double bootstrap =
        trajectory.back().done
            ? 0.0
            : state_value(params, RLState{last.actual_difficulty, last.score});
    const auto estimate = gae(trajectory, bootstrap, cfg.gamma, cfg.lambda);
    const auto part = make_samples(trajectory, estimate);
    samples.insert(samples.end(), part.begin(), part.end());
  }
  return samples;
}

FineTuneResult fine_tune_from_logs(const PolicyParams& params,
                                   std::span<const SessionLog> logs, const PPOConfig& cfg,
                                   const RewardSpec& reward_spec, std::uint64_t seed) {
  FineTuneResult result{params, 0, std::nullopt};
  const auto samples = samples_from_logs(params, logs, reward_spec, cfg);
  result.samples = samples.size();
  if (samples.empty()) return result;
  PPOConfig local = cfg;
  local.minibatch_size = std::min<int>(local.minibatch_size, static_cast<int>(samples.size()));
  AdamOptimizer optimizer(params.size());
  Rng rng = make_rng(seed, 4);
  result.metrics = ppo_update(result.params, optimizer, samples, local, rng);
  return result;
}

}  // namespace hexmem::rl
