#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hexmem/random.hpp"
#include "hexmem/rl/policy.hpp"

namespace hexmem::rl {

struct PPOConfig {
  double gamma = 0.95;
  double lambda = 0.95;
  double clip = 0.2;
  double learning_rate = 3e-4;
  int epochs = 10;
  int minibatch_size = 64;
  int rollout_length = 2048;
  double entropy_coef = 0.005;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
  bool normalize_advantages = true;

  void validate() const;
};

// One environment transition as collected by a rollout.
struct Transition {
  RLState state;
  double raw_action = 0.0;
  double action = 0.0;
  double log_prob = 0.0;  // behaviour policy, squash-corrected
  double reward = 0.0;
  double value = 0.0;     // critic estimate for `state`
  bool done = false;      // episode ended after this transition
};

using Trajectory = std::vector<Transition>;

struct AdvantageEstimate {
  std::vector<double> advantages;
  std::vector<double> value_targets;
};

// Generalized advantage estimation. `bootstrap_value` is V of the state that
// follows the last transition; it is ignored when that transition is done.
AdvantageEstimate gae(std::span<const Transition> trajectory, double bootstrap_value,
                      double gamma, double lambda);

// Training sample: a transition plus its advantage and value target.
struct Sample {
  RLState state;
  double raw_action = 0.0;
  double log_prob = 0.0;
  double advantage = 0.0;
  double value_target = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

std::vector<Sample> make_samples(std::span<const Transition> trajectory,
                                 const AdvantageEstimate& estimate);

struct LossTerms {
  double total = 0.0;
  double policy = 0.0;   // negated clipped surrogate
  double value = 0.0;    // mean squared value error
  double entropy = 0.0;  // pre-squash Gaussian entropy
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// total = policy + value_coef * value - entropy_coef * entropy, averaged over
// `samples`. Advantages are used as given. When `gradient` is non-null it
// receives d(total)/d(params), same layout as PolicyParams::flat().
LossTerms ppo_loss(const PolicyParams& params, std::span<const Sample> samples,
                   const PPOConfig& cfg, std::vector<double>* gradient = nullptr);

class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::size_t size = 0, double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8);

  void step(std::span<double> params, std::span<const double> gradient,
            double learning_rate);
  std::uint64_t steps() const { return steps_; }

 private:
  double beta1_;
  double beta2_;
  double epsilon_;
  std::uint64_t steps_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

struct UpdateMetrics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;      // of the updated policy on the whole batch
  double clip_fraction = 0.0;  // mean over minibatches
  int gradient_steps = 0;
};

// cfg.epochs passes over shuffled minibatches. Throws DomainError if the
// batch is smaller than a minibatch and TrainingError on a non-finite loss.
UpdateMetrics ppo_update(PolicyParams& params, AdamOptimizer& optimizer,
                         std::span<const Sample> batch, const PPOConfig& cfg, Rng& rng);

}  // namespace hexmem::rl
