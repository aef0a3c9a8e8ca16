// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "tarfas/mllm_client.hpp"
#include "tarfas/reward.hpp"

namespace tarfas::config {

struct AnnotateSection {
  std::size_t l_max = 6;
  int workers = 4;
  bool manual_gate = false;
  bool resend_on_format_error = true;
  std::filesystem::path hint_synonyms = "data/hint_synonyms.json";
  std::uint64_t seed = 0;
};

struct PathsSection {
  std::filesystem::path out_dir = "out";
  std::filesystem::path experts_dir = "experts";
};

struct AppConfig {
  reward::RewardConfig reward;
  chat::ClientConfig client;
  AnnotateSection annotate;
  PathsSection paths;

  /// Throws Config.
  void validate() const;
};

/// Looks up an environment variable; returns nullopt when unset.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup process_env();

/// "${NAME}" references are replaced from `env`; other text is kept as is.
/// Throws Config when a referenced variable is unset.
std::string interpolate_env(std::string_view text, const EnvLookup& env);

/// Every section and key is optional; unknown keys are rejected. Environment
/// references are honoured only in client.headers values. Throws Config.
AppConfig config_from_json(const nlohmann::json& j, const EnvLookup& env = process_env());
AppConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env());

/// Effective configuration with header values masked.
nlohmann::ordered_json config_to_json(const AppConfig& cfg);

}  // namespace tarfas::config
