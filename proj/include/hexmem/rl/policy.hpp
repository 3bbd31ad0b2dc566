#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hexmem/random.hpp"

namespace hexmem::rl {

// Last-trial observation: achieved task difficulty and the player's score.
struct RLState {
  double difficulty = 0.5;
  double score = 0.0;

  friend bool operator==(const RLState&, const RLState&) = default;
};

struct NetworkShape {
  int inputs = 2;
  int hidden1 = 32;
  int hidden2 = 32;

  // Parameters in one tanh MLP with a scalar linear output.
  std::size_t block_size() const {
    return static_cast<std::size_t>(hidden1) * inputs + hidden1 +
           static_cast<std::size_t>(hidden2) * hidden1 + hidden2 + hidden2 + 1;
  }
  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

// Actor (Gaussian mean), critic (state value) and a state-independent
// log standard deviation, stored contiguously:
//   [actor block | critic block | log_std]
// Each block is W1 (hidden1 x inputs, row-major), b1, W2, b2, w3, b3.
class PolicyParams {
 public:
  static constexpr double kMinLogStd = -5.0;
  static constexpr double kMaxLogStd = 1.0;

  PolicyParams() : PolicyParams(NetworkShape{}) {}
  explicit PolicyParams(NetworkShape shape);

  static PolicyParams initialize(std::uint64_t seed, NetworkShape shape = {},
                                 double initial_log_std = -1.5);

  const NetworkShape& shape() const { return shape_; }
  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> actor() { return flat().subspan(0, shape_.block_size()); }
  std::span<const double> actor() const { return flat().subspan(0, shape_.block_size()); }
  std::span<double> critic() {
    return flat().subspan(shape_.block_size(), shape_.block_size());
  }
  std::span<const double> critic() const {
    return flat().subspan(shape_.block_size(), shape_.block_size());
  }
  double log_std() const { return values_.back(); }
  double& log_std() { return values_.back(); }
  std::size_t log_std_index() const { return values_.size() - 1; }

  bool all_finite() const;
  void clamp_log_std();

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;

 private:
  NetworkShape shape_;
  std::vector<double> values_;
};

// Activations kept from a forward pass for backpropagation.
struct MlpCache {
  std::vector<double> input;
  std::vector<double> hidden1;
  std::vector<double> hidden2;
  double output = 0.0;
};

double mlp_forward(std::span<const double> block, const NetworkShape& shape,
                   std::span<const double> input, MlpCache* cache = nullptr);

// Accumulates d(output)/d(block) * upstream into grad_block.
void mlp_backward(std::span<const double> block, const NetworkShape& shape,
                  const MlpCache& cache, double upstream, std::span<double> grad_block);

// Network input for a state (each component mapped from [0,1] to [-1,1]).
std::vector<double> state_features(const RLState& state);

enum class ActMode { kStochastic, kDeterministic };

struct ActionSample {
  double raw = 0.0;       // pre-squash Gaussian sample
  double action = 0.5;    // (tanh(raw) + 1) / 2, the next difficulty
  double log_prob = 0.0;  // log density of `action`, squash-corrected
  double mean = 0.0;      // actor output
};

double squash(double raw);
// log |d action / d raw| for action = (tanh(raw) + 1) / 2.
double squash_log_jacobian(double raw);
double gaussian_log_density(double x, double mean, double log_std);

double policy_mean(const PolicyParams& params, const RLState& state);
double state_value(const PolicyParams& params, const RLState& state);
// Log density of the squashed action produced by `raw` in `state`.
double action_log_prob(const PolicyParams& params, const RLState& state, double raw);

// Throws TrainingError when the actor output is not finite. `rng` is only
// used in stochastic mode.
ActionSample act(const PolicyParams& params, const RLState& state, ActMode mode,
                 Rng* rng = nullptr);

// Closed-form KL(old || new) between the two pre-squash Gaussians at `state`.
// The squash is a fixed bijection, so this is also the KL of the actions.
double policy_kl(const PolicyParams& old_params, const PolicyParams& new_params,
                 const RLState& state);

}  // namespace hexmem::rl
