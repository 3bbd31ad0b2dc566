#pragma once

#include <string>
#include <string_view>

namespace hexmem::rl {

enum class RewardKind { kR1, kR2, kR3 };

struct RewardSpec {
  RewardKind kind = RewardKind::kR1;
  double r3_constant = 0.35;
};

// R1: 0 above 0.9, +1 on [0.7, 0.9], -1 below 0.7 (including a score of 0).
// R2: -0.5 above 0.9, +1 on [0.7, 0.9], -1 on [0.4, 0.7), -2 below 0.4.
// R3: r3_constant * score * difficulty.
// Throws DomainError for inputs outside [0, 1].
double reward(const RewardSpec& spec, double score, double difficulty);

RewardKind parse_reward_kind(std::string_view name);
std::string to_string(RewardKind kind);

}  // namespace hexmem::rl
