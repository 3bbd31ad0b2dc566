#include "hexmem/rl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hexmem/errors.hpp"

namespace hexmem::rl {

PolicyParams::PolicyParams(NetworkShape shape)
    : shape_(shape), values_(2 * shape.block_size() + 1, 0.0) {}

PolicyParams PolicyParams::initialize(std::uint64_t seed, NetworkShape shape,
                                      double initial_log_std) {
  PolicyParams p(shape);
  Rng rng = make_rng(seed, 0x9011c7);
  auto init_block = [&](std::span<double> block, double output_gain) {
    std::size_t at = 0;
    auto fill = [&](int fan_out, int fan_in, double gain) {
      const double scale = gain / std::sqrt(static_cast<double>(fan_in));
      for (int i = 0; i < fan_out * fan_in; ++i) block[at++] = scale * standard_normal(rng);
      at += static_cast<std::size_t>(fan_out);  // biases start at zero
    };
    fill(shape.hidden1, shape.inputs, 1.0);
    fill(shape.hidden2, shape.hidden1, 1.0);
    fill(1, shape.hidden2, output_gain);
  };
  init_block(p.actor(), 0.01);
  init_block(p.critic(), 1.0);
  p.log_std() = initial_log_std;
  p.clamp_log_std();
  return p;
}

bool PolicyParams::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

void PolicyParams::clamp_log_std() {
  log_std() = std::clamp(log_std(), kMinLogStd, kMaxLogStd);
}

double mlp_forward(std::span<const double> block, const NetworkShape& shape,
                   std::span<const double> input, MlpCache* cache) {
  const int in = shape.inputs;
  const int h1 = shape.hidden1;
  const int h2 = shape.hidden2;
  const double* w1 = block.data();
  const double* b1 = w1 + h1 * in;
  const double* w2 = b1 + h1;
  const double* b2 = w2 + h2 * h1;
  const double* w3 = b2 + h2;
  const double b3 = w3[h2];

  std::vector<double> a1(h1);
  for (int i = 0; i < h1; ++i) {
    double z = b1[i];
    for (int j = 0; j < in; ++j) z += w1[i * in + j] * input[j];
    a1[i] = std::tanh(z);
  }
  std::vector<double> a2(h2);
  for (int i = 0; i < h2; ++i) {
    double z = b2[i];
    for (int j = 0; j < h1; ++j) z += w2[i * h1 + j] * a1[j];
    a2[i] = std::tanh(z);
  }
  double out = b3;
  for (int i = 0; i < h2; ++i) out += w3[i] * a2[i];

  if (cache != nullptr) {
    cache->input.assign(input.begin(), input.end());
    cache->hidden1 = std::move(a1);
    cache->hidden2 = std::move(a2);
    cache->output = out;
  }
  return out;
}

void mlp_backward(std::span<const double> block, const NetworkShape& shape,
                  const MlpCache& cache, double upstream, std::span<double> grad) {
  const int in = shape.inputs;
  const int h1 = shape.hidden1;
  const int h2 = shape.hidden2;
  const std::size_t o_b1 = static_cast<std::size_t>(h1) * in;
  const std::size_t o_w2 = o_b1 + h1;
  const std::size_t o_b2 = o_w2 + static_cast<std::size_t>(h2) * h1;
  const std::size_t o_w3 = o_b2 + h2;
  const std::size_t o_b3 = o_w3 + h2;

  grad[o_b3] += upstream;
  std::vector<double> dz2(h2);
  for (int i = 0; i < h2; ++i) {
    const double a = cache.hidden2[i];
    grad[o_w3 + i] += upstream * a;
    dz2[i] = upstream * block[o_w3 + i] * (1.0 - a * a);
  }
  std::vector<double> da1(h1, 0.0);
  for (int i = 0; i < h2; ++i) {
    grad[o_b2 + i] += dz2[i];
    for (int j = 0; j < h1; ++j) {
      grad[o_w2 + i * h1 + j] += dz2[i] * cache.hidden1[j];
      da1[j] += dz2[i] * block[o_w2 + i * h1 + j];
    }
  }
  for (int i = 0; i < h1; ++i) {
    const double a = cache.hidden1[i];
    const double dz1 = da1[i] * (1.0 - a * a);
    grad[o_b1 + i] += dz1;
    for (int j = 0; j < in; ++j) grad[i * in + j] += dz1 * cache.input[j];
  }
}

std::vector<double> state_features(const RLState& state) {
  return {2.0 * state.difficulty - 1.0, 2.0 * state.score - 1.0};
}

double squash(double raw) { return 0.5 * (std::tanh(raw) + 1.0); }

double squash_log_jacobian(double raw) {
  // log((1 - tanh^2 raw) / 2) = log 2 - 2|raw| - 2 log(1 + e^{-2|raw|})
  const double a = std::abs(raw);
  return std::numbers::ln2 - 2.0 * a - 2.0 * std::log1p(std::exp(-2.0 * a));
}

double gaussian_log_density(double x, double mean, double log_std) {
  const double z = (x - mean) * std::exp(-log_std);
  return -0.5 * z * z - log_std - 0.5 * std::log(2.0 * std::numbers::pi);
}

double policy_mean(const PolicyParams& params, const RLState& state) {
  const auto x = state_features(state);
  return mlp_forward(params.actor(), params.shape(), x);
}

double state_value(const PolicyParams& params, const RLState& state) {
  const auto x = state_features(state);
  return mlp_forward(params.critic(), params.shape(), x);
}

double action_log_prob(const PolicyParams& params, const RLState& state, double raw) {
  return gaussian_log_density(raw, policy_mean(params, state), params.log_std()) -
         squash_log_jacobian(raw);
}

ActionSample act(const PolicyParams& params, const RLState& state, ActMode mode, Rng* rng) {
  ActionSample s;
  s.mean = policy_mean(params, state);
  if (!std::isfinite(s.mean)) {
    throw TrainingError("actor produced a non-finite mean for state (" +
                        std::to_string(state.difficulty) + ", " +
                        std::to_string(state.score) + ")");
  }
  if (mode == ActMode::kStochastic) {
    if (rng == nullptr) throw StateError("stochastic act needs a random generator");
    s.raw = s.mean + std::exp(params.log_std()) * standard_normal(*rng);
  } else {
    s.raw = s.mean;
  }
  s.action = squash(s.raw);
  s.log_prob = gaussian_log_density(s.raw, s.mean, params.log_std()) -
               squash_log_jacobian(s.raw);
  return s;
}

double policy_kl(const PolicyParams& old_params, const PolicyParams& new_params,
                 const RLState& state) {
  const double m0 = policy_mean(old_params, state);
  const double m1 = policy_mean(new_params, state);
  const double ls0 = old_params.log_std();
  const double ls1 = new_params.log_std();
  const double v0 = std::exp(2.0 * ls0);
  const double v1 = std::exp(2.0 * ls1);
  return ls1 - ls0 + (v0 + (m0 - m1) * (m0 - m1)) / (2.0 * v1) - 0.5;
}

}  // namespace hexmem::rl
