// SPDX-License-Identifier: Apache-2.0
#include "tarfas/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "tarfas/error.hpp"

namespace tarfas::config {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(Errc::Config, where + ": " + what);
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<std::string_view> known) {
  if (!obj.is_object()) fail(where, "must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) fail(where, "unknown key '" + key + "'");
  }
}

template <typename Fn>
void with(const json& obj, const char* key, Fn&& fn) {
  if (const auto it = obj.find(key); it != obj.end()) fn(*it);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "must be a number");
  return v.get<double>();
}

std::int64_t integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "must be an integer");
  return v.get<std::int64_t>();
}

bool boolean(const json& v, const std::string& where) {
  if (!v.is_boolean()) fail(where, "must be a boolean");
  return v.get<bool>();
}

std::string string(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "must be a string");
  return v.get<std::string>();
}

void read_reward(const json& j, reward::RewardConfig& r) {
  reject_unknown(j, "reward",
                 {"beta_fast", "beta_rsn", "beta_tool", "gamma", "clamp_mode", "group_size", "std_epsilon"});
  with(j, "beta_fast", [&](const json& v) { r.beta_fast = number(v, "reward.beta_fast"); });
  with(j, "beta_rsn", [&](const json& v) { r.beta_rsn = number(v, "reward.beta_rsn"); });
  with(j, "beta_tool", [&](const json& v) { r.beta_tool = number(v, "reward.beta_tool"); });
  with(j, "gamma", [&](const json& v) {
    if (v.is_number()) {
      r.gamma.fill(v.get<double>());
    } else if (v.is_array()) {
      if (v.size() != vistools::kToolCount) fail("reward.gamma", "array must have one entry per tool");
      for (std::size_t k = 0; k < v.size(); ++k) r.gamma[k] = number(v[k], "reward.gamma");
    } else if (v.is_object()) {
      for (const auto& [name, w] : v.items()) {
        const auto tool = vistools::parse_tool_name(name);
        if (!tool) fail("reward.gamma", "unknown tool '" + name + "'");
        r.gamma[vistools::index_of(*tool)] = number(w, "reward.gamma." + name);
      }
    } else {
      fail("reward.gamma", "must be a number, an array or an object keyed by tool name");
    }
  });
  with(j, "clamp_mode", [&](const json& v) {
    const auto mode = reward::parse_clamp_mode(string(v, "reward.clamp_mode"));
    if (!mode) fail("reward.clamp_mode", "must be literal_max or capped_min");
    r.clamp_mode = *mode;
  });
  with(j, "group_size", [&](const json& v) { r.group_size = static_cast<int>(integer(v, "reward.group_size")); });
  with(j, "std_epsilon", [&](const json& v) { r.std_epsilon = number(v, "reward.std_epsilon"); });
}

void read_client(const json& j, chat::ClientConfig& c, const EnvLookup& env) {
  reject_unknown(j, "client",
                 {"endpoint", "model", "api_key_env", "headers", "timeout_s", "max_retries", "backoff_base_s",
                  "backoff_max_s", "temperature", "max_tokens", "requests_per_minute", "extra_params"});
  with(j, "endpoint", [&](const json& v) { c.endpoint = string(v, "client.endpoint"); });
  with(j, "model", [&](const json& v) { c.model = string(v, "client.model"); });
  with(j, "api_key_env", [&](const json& v) { c.api_key_env = string(v, "client.api_key_env"); });
  with(j, "headers", [&](const json& v) {
    if (!v.is_object()) fail("client.headers", "must be an object");
    for (const auto& [name, value] : v.items()) {
      c.headers[name] = interpolate_env(string(value, "client.headers." + name), env);
    }
  });
  with(j, "timeout_s", [&](const json& v) { c.timeout_s = number(v, "client.timeout_s"); });
  with(j, "max_retries", [&](const json& v) { c.max_retries = static_cast<int>(integer(v, "client.max_retries")); });
  with(j, "backoff_base_s", [&](const json& v) { c.backoff_base_s = number(v, "client.backoff_base_s"); });
  with(j, "backoff_max_s", [&](const json& v) { c.backoff_max_s = number(v, "client.backoff_max_s"); });
  with(j, "temperature", [&](const json& v) { c.temperature = number(v, "client.temperature"); });
  with(j, "max_tokens", [&](const json& v) {
    if (v.is_null()) {
      c.max_tokens.reset();
    } else {
      c.max_tokens = static_cast<int>(integer(v, "client.max_tokens"));
    }
  });
  with(j, "requests_per_minute",
       [&](const json& v) { c.requests_per_minute = number(v, "client.requests_per_minute"); });
  with(j, "extra_params", [&](const json& v) {
    if (!v.is_object()) fail("client.extra_params", "must be an object");
    c.extra_params = v;
  });
}

void read_annotate(const json& j, AnnotateSection& a) {
  reject_unknown(j, "annotate", {"l_max", "workers", "manual_gate", "resend_on_format_error", "hint_synonyms", "seed"});
  with(j, "l_max", [&](const json& v) {
    const auto n = integer(v, "annotate.l_max");
    if (n < 1) fail("annotate.l_max", "must be at least 1");
    a.l_max = static_cast<std::size_t>(n);
  });
  with(j, "workers", [&](const json& v) { a.workers = static_cast<int>(integer(v, "annotate.workers")); });
  with(j, "manual_gate", [&](const json& v) { a.manual_gate = boolean(v, "annotate.manual_gate"); });
  with(j, "resend_on_format_error",
       [&](const json& v) { a.resend_on_format_error = boolean(v, "annotate.resend_on_format_error"); });
  with(j, "hint_synonyms", [&](const json& v) { a.hint_synonyms = string(v, "annotate.hint_synonyms"); });
  with(j, "seed", [&](const json& v) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      fail("annotate.seed", "must be a non-negative integer");
    }
    a.seed = v.get<std::uint64_t>();
  });
}

void read_paths(const json& j, PathsSection& p) {
  reject_unknown(j, "paths", {"out_dir", "experts_dir"});
  with(j, "out_dir", [&](const json& v) { p.out_dir = string(v, "paths.out_dir"); });
  with(j, "experts_dir", [&](const json& v) { p.experts_dir = string(v, "paths.experts_dir"); });
}

}  // namespace

void AppConfig::validate() const {
  reward.validate();
  client.validate();
  if (annotate.l_max < 1) throw Error(Errc::Config, "annotate.l_max must be at least 1");
  if (annotate.workers < 1) throw Error(Errc::Config, "annotate.workers must be at least 1");
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* value = std::getenv(name.c_str());
    if (value == nullptr) return std::nullopt;
    return std::string(value);
  };
}

std::string interpolate_env(std::string_view text, const EnvLookup& env) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find("${", pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find('}', open + 2);
    if (close == std::string_view::npos) break;
    out.append(text.substr(pos, open - pos));
    const std::string name(text.substr(open + 2, close - open - 2));
    const auto value = env(name);
    if (!value) throw Error(Errc::Config, "environment variable '" + name + "' is not set");
    out += *value;
    pos = close + 1;
  }
  out.append(text.substr(pos));
  return out;
}

AppConfig config_from_json(const json& j, const EnvLookup& env) {
  reject_unknown(j, "config", {"reward", "client", "annotate", "paths"});
  AppConfig cfg;
  with(j, "reward", [&](const json& v) { read_reward(v, cfg.reward); });
  with(j, "client", [&](const json& v) { read_client(v, cfg.client, env); });
  with(j, "annotate", [&](const json& v) { read_annotate(v, cfg.annotate); });
  with(j, "paths", [&](const json& v) { read_paths(v, cfg.paths); });
  cfg.validate();
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Config, "cannot open config '" + path.string() + "'");
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::Config, "config '" + path.string() + "' is not valid JSON");
  return config_from_json(j, env);
}

ordered_json config_to_json(const AppConfig& cfg) {
  ordered_json j;
  auto& r = j["reward"];
  r["beta_fast"] = cfg.reward.beta_fast;
  r["beta_rsn"] = cfg.reward.beta_rsn;
  r["beta_tool"] = cfg.reward.beta_tool;
  r["gamma"] = cfg.reward.gamma;
  r["clamp_mode"] = reward::to_string(cfg.reward.clamp_mode);
  r["group_size"] = cfg.reward.group_size;
  r["std_epsilon"] = cfg.reward.std_epsilon;
  auto& c = j["client"];
  c["endpoint"] = cfg.client.endpoint;
  c["model"] = cfg.client.model;
  c["api_key_env"] = cfg.client.api_key_env;
  ordered_json headers = ordered_json::object();
  for (const auto& [name, value] : cfg.client.headers) headers[name] = "***";
  c["headers"] = std::move(headers);
  c["timeout_s"] = cfg.client.timeout_s;
  c["max_retries"] = cfg.client.max_retries;
  c["backoff_base_s"] = cfg.client.backoff_base_s;
  c["backoff_max_s"] = cfg.client.backoff_max_s;
  c["temperature"] = cfg.client.temperature;
  c["max_tokens"] = cfg.client.max_tokens ? ordered_json(*cfg.client.max_tokens) : ordered_json(nullptr);
  c["requests_per_minute"] = cfg.client.requests_per_minute;
  c["extra_params"] = cfg.client.extra_params;
  auto& a = j["annotate"];
  a["l_max"] = cfg.annotate.l_max;
  a["workers"] = cfg.annotate.workers;
  a["manual_gate"] = cfg.annotate.manual_gate;
  a["resend_on_format_error"] = cfg.annotate.resend_on_format_error;
  a["hint_synonyms"] = cfg.annotate.hint_synonyms.generic_string();
  a["seed"] = cfg.annotate.seed;
  j["paths"] = ordered_json{{"out_dir", cfg.paths.out_dir.generic_string()},
                            {"experts_dir", cfg.paths.experts_dir.generic_string()}};
  return j;
}

}  // namespace tarfas::config
