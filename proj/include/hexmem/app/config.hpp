#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "hexmem/controllers.hpp"
#include "hexmem/rl/reward.hpp"
#include "hexmem/taskmodel.hpp"

namespace hexmem::app {

// Service configuration. The file format is one `key = value` pair per
// line; `#` starts a comment. Every key can be overridden by an environment
// variable named HEXMEM_<KEY> in upper case, e.g. HEXMEM_DDB_PATH.
//
//   weight_targets, weight_components, weight_distribution
//   ddb_path            database file; empty builds one at startup
//   ddb_per_stratum     size of a database built at startup
//   ddb_seed
//   policy_path         checkpoint; empty disables the rl method
//   high_score, low_score, initial_targets, initial_difficulty,
//   target_step, difficulty_step, exclusion_window, lookup_tolerance
//   reward              r1 | r2 | r3
//   r3_constant
//   host, port          bind address
//   data_dir            session logs
//   trials              trials per session
struct AppConfig {
  DifficultyWeights weights;
  std::filesystem::path ddb_path;
  std::size_t ddb_per_stratum = 20000;
  std::uint64_t ddb_seed = 0;
  std::filesystem::path policy_path;
  ControllerConfig controller;
  rl::RewardSpec reward;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "sessions";
  int trials = 20;

  // Throws ConfigError on unusable values or referenced files that do not
  // exist.
  void validate() const;
};

using KeyValues = std::map<std::string, std::string>;

// Throws ConfigError on syntax errors and duplicate keys.
KeyValues parse_key_values(std::istream& in, std::string_view origin = "config");

// Throws ConfigError on unknown keys and unparsable values.
void apply_values(AppConfig& config, const KeyValues& values);

// HEXMEM_* variables mapped to config keys. `lookup` defaults to getenv.
KeyValues environment_overrides(
    const std::function<std::optional<std::string>(const std::string&)>& lookup = {});

// File values, then environment overrides, then validation.
AppConfig load_config(const std::filesystem::path& path,
                      const std::function<std::optional<std::string>(const std::string&)>&
                          lookup = {});

}  // namespace hexmem::app
