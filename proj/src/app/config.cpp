#include "hexmem/app/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <vector>

#include "hexmem/errors.hpp"

namespace hexmem::app {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key " + key + ": cannot parse '" + value + "'");
  }
  return out;
}

using Setter = std::function<void(AppConfig&, const std::string& key, const std::string&)>;

template <typename T, typename Field>
Setter number(Field field) {
  return [field](AppConfig& c, const std::string& k, const std::string& v) {
    field(c) = parse_number<T>(k, v);
  };
}

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"weight_targets", number<double>([](AppConfig& c) -> double& { return c.weights.targets; })},
      {"weight_components",
       number<double>([](AppConfig& c) -> double& { return c.weights.components; })},
      {"weight_distribution",
       number<double>([](AppConfig& c) -> double& { return c.weights.distribution; })},
      {"ddb_path", [](AppConfig& c, const std::string&, const std::string& v) { c.ddb_path = v; }},
      {"ddb_per_stratum",
       number<std::size_t>([](AppConfig& c) -> std::size_t& { return c.ddb_per_stratum; })},
      {"ddb_seed", number<std::uint64_t>([](AppConfig& c) -> std::uint64_t& { return c.ddb_seed; })},
      {"policy_path",
       [](AppConfig& c, const std::string&, const std::string& v) { c.policy_path = v; }},
      {"high_score",
       number<double>([](AppConfig& c) -> double& { return c.controller.high_score; })},
      {"low_score", number<double>([](AppConfig& c) -> double& { return c.controller.low_score; })},
      {"initial_targets",
       number<int>([](AppConfig& c) -> int& { return c.controller.initial_targets; })},
      {"initial_difficulty",
       number<double>([](AppConfig& c) -> double& { return c.controller.initial_difficulty; })},
      {"target_step", number<int>([](AppConfig& c) -> int& { return c.controller.target_step; })},
      {"difficulty_step",
       number<double>([](AppConfig& c) -> double& { return c.controller.difficulty_step; })},
      {"exclusion_window", number<std::size_t>([](AppConfig& c) -> std::size_t& {
         return c.controller.exclusion_window;
       })},
      {"lookup_tolerance",
       number<double>([](AppConfig& c) -> double& { return c.controller.lookup.tolerance; })},
      {"reward",
       [](AppConfig& c, const std::string&, const std::string& v) {
         c.reward.kind = rl::parse_reward_kind(v);
       }},
      {"r3_constant", number<double>([](AppConfig& c) -> double& { return c.reward.r3_constant; })},
      {"host", [](AppConfig& c, const std::string&, const std::string& v) { c.host = v; }},
      {"port", number<int>([](AppConfig& c) -> int& { return c.port; })},
      {"data_dir", [](AppConfig& c, const std::string&, const std::string& v) { c.data_dir = v; }},
      {"trials", number<int>([](AppConfig& c) -> int& { return c.trials; })},
  };
  return table;
}

}  // namespace

void AppConfig::validate() const {
  weights.validate();
  controller.validate();
  if (!ddb_path.empty() && !std::filesystem::exists(ddb_path)) {
    throw ConfigError("database file " + ddb_path.string() + " does not exist");
  }
  if (!policy_path.empty() && !std::filesystem::exists(policy_path)) {
    throw ConfigError("policy checkpoint " + policy_path.string() + " does not exist");
  }
  if (ddb_path.empty() && ddb_per_stratum == 0) {
    throw ConfigError("ddb_per_stratum must be positive");
  }
  if (port < 0 || port > 65535) throw ConfigError("port out of range");
  if (trials < 1) throw ConfigError("trials must be positive");
  if (data_dir.empty()) throw ConfigError("data_dir must be set");
}

KeyValues parse_key_values(std::istream& in, std::string_view origin) {
  KeyValues out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    const auto where = std::string(origin) + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!out.emplace(key, trim(std::string_view(text).substr(eq + 1))).second) {
      throw ConfigError(where + ": duplicate key " + key);
    }
  }
  return out;
}

void apply_values(AppConfig& config, const KeyValues& values) {
  const auto& table = setters();
  for (const auto& [key, value] : values) {
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const auto& entry) { return entry.first == key; });
    if (it == table.end()) throw ConfigError("unknown config key " + key);
    it->second(config, key, value);
  }
}

KeyValues environment_overrides(
    const std::function<std::optional<std::string>(const std::string&)>& lookup) {
  const auto get = [&](const std::string& name) -> std::optional<std::string> {
    if (lookup) return lookup(name);
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
  KeyValues out;
  for (const auto& [key, setter] : setters()) {
    std::string name = "HEXMEM_" + key;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    if (auto v = get(name)) out[key] = trim(*v);
  }
  return out;
}

AppConfig load_config(const std::filesystem::path& path,
                      const std::function<std::optional<std::string>(const std::string&)>&
                          lookup) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  AppConfig config;
  apply_values(config, parse_key_values(in, path.string()));
  apply_values(config, environment_overrides(lookup));
  config.validate();
  return config;
}

}  // namespace hexmem::app
