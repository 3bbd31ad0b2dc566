#include "hexmem/rl/reward.hpp"

#include "hexmem/errors.hpp"
#include "hexmem/score_bands.hpp"

namespace hexmem::rl {

double reward(const RewardSpec& spec, double score, double difficulty) {
  if (!(score >= 0.0 && score <= 1.0)) throw DomainError("score must lie in [0, 1]");
  if (!(difficulty >= 0.0 && difficulty <= 1.0)) {
    throw DomainError("difficulty must lie in [0, 1]");
  }
  switch (spec.kind) {
    case RewardKind::kR1:
      if (score > kHighScore) return 0.0;
      if (score >= kLowScore) return 1.0;
      return -1.0;
    case RewardKind::kR2:
      if (score > kHighScore) return -0.5;
      if (score >= kLowScore) return 1.0;
      if (score >= 0.4) return -1.0;
      return -2.0;
    case RewardKind::kR3:
      if (!(spec.r3_constant > 0.0)) throw ConfigError("R3 constant must be positive");
      return spec.r3_constant * score * difficulty;
  }
  throw ConfigError("unknown reward kind");
}

RewardKind parse_reward_kind(std::string_view name) {
  if (name == "r1" || name == "R1") return RewardKind::kR1;
  if (name == "r2" || name == "R2") return RewardKind::kR2;
  if (name == "r3" || name == "R3") return RewardKind::kR3;
  throw ConfigError("unknown reward \"" + std::string(name) + "\" (expected r1, r2 or r3)");
}

std::string to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::kR1: return "r1";
    case RewardKind::kR2: return "r2";
    case RewardKind::kR3: return "r3";
  }
  return "?";
}

}  // namespace hexmem::rl
