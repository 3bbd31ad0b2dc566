#include "hexmem/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "hexmem/errors.hpp"

namespace hexmem::rl {

void PPOConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (!(clip > 0.0)) throw ConfigError("clip range must be positive");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be nonnegative");
  if (epochs < 1 || minibatch_size < 1 || rollout_length < 1) {
    throw ConfigError("epochs, minibatch size and rollout length must be positive");
  }
}

AdvantageEstimate gae(std::span<const Transition> trajectory, double bootstrap_value,
                      double gamma, double lambda) {
  if (trajectory.empty()) throw DomainError("gae needs a nonempty trajectory");
  const std::size_t n = trajectory.size();
  AdvantageEstimate out;
  out.advantages.assign(n, 0.0);
  out.value_targets.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const Transition& t = trajectory[k];
    const double next_value = k + 1 < n ? trajectory[k + 1].value : bootstrap_value;
    const double continuing = t.done ? 0.0 : 1.0;
    const double delta = t.reward + gamma * next_value * continuing - t.value;
    running = delta + gamma * lambda * continuing * running;
    out.advantages[k] = running;
    out.value_targets[k] = running + t.value;
  }
  return out;
}

std::vector<Sample> make_samples(std::span<const Transition> trajectory,
                                 const AdvantageEstimate& estimate) {
  std::vector<Sample> samples;
  samples.reserve(trajectory.size());
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const Transition& t = trajectory[i];
    samples.push_back(Sample{t.state, t.raw_action, t.log_prob, estimate.advantages[i],
                             estimate.value_targets[i]});
  }
  return samples;
}

LossTerms ppo_loss(const PolicyParams& params, std::span<const Sample> samples,
                   const PPOConfig& cfg, std::vector<double>* gradient) {
  if (samples.empty()) throw DomainError("ppo loss over an empty batch");
  const NetworkShape& shape = params.shape();
  const std::size_t block = shape.block_size();
  const double n = static_cast<double>(samples.size());
  const double log_std = params.log_std();
  const double inv_var = std::exp(-2.0 * log_std);

  if (gradient != nullptr) gradient->assign(params.size(), 0.0);
  std::span<double> g_actor;
  std::span<double> g_critic;
  if (gradient != nullptr) {
    g_actor = std::span<double>(*gradient).subspan(0, block);
    g_critic = std::span<double>(*gradient).subspan(block, block);
  }

  LossTerms terms;
  double g_log_std = 0.0;
  MlpCache actor_cache;
  MlpCache critic_cache;
  for (const Sample& s : samples) {
    const auto x = state_features(s.state);
    const double mean = mlp_forward(params.actor(), shape, x, &actor_cache);
    const double value = mlp_forward(params.critic(), shape, x, &critic_cache);

    const double new_log_prob =
        gaussian_log_density(s.raw_action, mean, log_std) - squash_log_jacobian(s.raw_action);
    const double log_ratio = new_log_prob - s.log_prob;
    const double ratio = std::exp(log_ratio);
    const double clipped_ratio = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    const double unclipped_obj = ratio * s.advantage;
    const double clipped_obj = clipped_ratio * s.advantage;
    const bool unclipped_active = unclipped_obj <= clipped_obj;
    terms.policy -= std::min(unclipped_obj, clipped_obj) / n;
    terms.approx_kl += ((ratio - 1.0) - log_ratio) / n;
    if (std::abs(ratio - 1.0) > cfg.clip) terms.clip_fraction += 1.0 / n;

    const double err = value - s.value_target;
    terms.value += err * err / n;

    if (gradient != nullptr) {
      if (unclipped_active) {
        // d(-ratio * A)/d(theta) = -ratio * A * d(log N)/d(theta)
        const double coeff = -ratio * s.advantage / n;
        const double diff = s.raw_action - mean;
        const double dlogp_dmean = diff * inv_var;
        const double dlogp_dlogstd = diff * diff * inv_var - 1.0;
        mlp_backward(params.actor(), shape, actor_cache, coeff * dlogp_dmean, g_actor);
        g_log_std += coeff * dlogp_dlogstd;
      }
      mlp_backward(params.critic(), shape, critic_cache, cfg.value_coef * 2.0 * err / n,
                   g_critic);
    }
  }
  terms.entropy = 0.5 * (1.0 + std::log(2.0 * std::numbers::pi)) + log_std;
  terms.total = terms.policy + cfg.value_coef * terms.value - cfg.entropy_coef * terms.entropy;
  if (gradient != nullptr) {
    (*gradient)[params.log_std_index()] = g_log_std - cfg.entropy_coef;
  }
  return terms;
}

AdamOptimizer::AdamOptimizer(std::size_t size, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(size, 0.0), v_(size, 0.0) {}

void AdamOptimizer::step(std::span<double> params, std::span<const double> gradient,
                         double learning_rate) {
  if (m_.size() != params.size()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
    steps_ = 0;
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * gradient[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * gradient[i] * gradient[i];
    params[i] -= learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + epsilon_);
  }
}

UpdateMetrics ppo_update(PolicyParams& params, AdamOptimizer& optimizer,
                         std::span<const Sample> batch, const PPOConfig& cfg, Rng& rng) {
  cfg.validate();
  if (batch.size() < static_cast<std::size_t>(cfg.minibatch_size)) {
    throw DomainError("batch of " + std::to_string(batch.size()) +
                      " samples is smaller than one minibatch");
  }
  std::vector<Sample> samples(batch.begin(), batch.end());
  if (cfg.normalize_advantages && samples.size() > 1) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s.advantage;
    mean /= samples.size();
    double var = 0.0;
    for (const auto& s : samples) var += (s.advantage - mean) * (s.advantage - mean);
    const double sd = std::sqrt(var / samples.size());
    for (auto& s : samples) s.advantage = (s.advantage - mean) / (sd + 1e-8);
  }

  UpdateMetrics metrics;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> gradient;
  std::vector<Sample> minibatch;
  int minibatches = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch_size));
      minibatch.clear();
      for (std::size_t i = start; i < end; ++i) minibatch.push_back(samples[order[i]]);

      const LossTerms terms = ppo_loss(params, minibatch, cfg, &gradient);
      if (!std::isfinite(terms.total)) {
        std::ostringstream msg;
        msg << "non-finite PPO loss at epoch " << epoch << ", minibatch starting at "
            << start << ": policy=" << terms.policy << " value=" << terms.value
            << " log_std=" << params.log_std();
        throw TrainingError(msg.str());
      }
      if (cfg.max_grad_norm > 0.0) {
        double norm2 = 0.0;
        for (double g : gradient) norm2 += g * g;
        const double norm = std::sqrt(norm2);
        if (norm > cfg.max_grad_norm) {
          for (double& g : gradient) g *= cfg.max_grad_norm / norm;
        }
      }
      optimizer.step(params.flat(), gradient, cfg.learning_rate);
      params.clamp_log_std();

      metrics.policy_loss += terms.policy;
      metrics.value_loss += terms.value;
      metrics.entropy += terms.entropy;
      metrics.clip_fraction += terms.clip_fraction;
      ++minibatches;
    }
  }
  metrics.gradient_steps = minibatches;
  metrics.policy_loss /= minibatches;
  metrics.value_loss /= minibatches;
  metrics.entropy /= minibatches;
  metrics.clip_fraction /= minibatches;
  metrics.approx_kl = ppo_loss(params, samples, cfg).approx_kl;
  if (!params.all_finite()) throw TrainingError("PPO update produced non-finite weights");
  return metrics;
}

}  // namespace hexmem::rl
