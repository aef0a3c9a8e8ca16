// SPDX-License-Identifier: Apache-2.0
#include "tarfas/mllm_client.hpp"

#include <fstream>
#include <regex>
#include <thread>

#include "tarfas/error.hpp"

namespace tarfas::chat {

void ClientConfig::validate() const {
  if (!(timeout_s > 0)) throw Error(Errc::Config, "client timeout must be positive");
  if (max_retries < 0) throw Error(Errc::Config, "client max_retries must be >= 0");
  if (backoff_base_s < 0 || backoff_max_s < 0) throw Error(Errc::Config, "client backoff must be >= 0");
  if (requests_per_minute < 0) throw Error(Errc::Config, "requests_per_minute must be >= 0");
  static const std::regex kUrl(R"(^https?://[^/:\s]+(:\d+)?(/\S*)?$)");
  if (!std::regex_match(endpoint, kUrl)) {
    throw Error(Errc::Config, "client endpoint '" + endpoint + "' is not an http(s) URL");
  }
  if (!extra_params.is_object()) throw Error(Errc::Config, "client extra_params must be an object");
}

RateLimiter::RateLimiter(double requests_per_minute)
    : per_second_(requests_per_minute / 60.0), next_free_(Clock::now()) {}

void RateLimiter::acquire() {
  if (per_second_ <= 0) return;
  Clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = Clock::now();
    slot = std::max(now, next_free_);
    next_free_ = slot + std::chrono::duration_cast<Clock::duration>(
                            std::chrono::duration<double>(1.0 / per_second_));
  }
  std::this_thread::sleep_until(slot);
}

nlohmann::json build_request(const std::vector<Message>& history, const ClientConfig& cfg,
                             const ChatOptions& opts) {
  nlohmann::json body = cfg.extra_params;
  if (!cfg.model.empty()) body["model"] = cfg.model;
  auto messages = nlohmann::json::array();
  for (const auto& msg : history) messages.push_back(to_wire(msg));
  body["messages"] = std::move(messages);
  body["temperature"] = opts.temperature.value_or(cfg.temperature);
  body["seed"] = opts.seed;
  if (cfg.max_tokens) body["max_tokens"] = *cfg.max_tokens;
  return body;
}

std::string parse_completion(std::string_view body) {
  const auto j = nlohmann::json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded()) throw Error(Errc::Protocol, "completion body is not valid JSON");
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    throw Error(Errc::Protocol, "completion has no choices");
  }
  const auto& first = choices->front();
  if (!first.is_object() || !first.contains("message") || !first["message"].is_object()) {
    throw Error(Errc::Protocol, "completion choice has no message");
  }
  const auto& message = first["message"];
  const auto content = message.find("content");
  if (content == message.end()) throw Error(Errc::Protocol, "completion message has no content");
  if (content->is_string()) return content->get<std::string>();
  if (content->is_array()) {
    std::string text;
    for (const auto& part : *content) {
      if (part.is_object() && part.value("type", "") == "text" && part.contains("text") &&
          part["text"].is_string()) {
        text += part["text"].get<std::string>();
      }
    }
    return text;
  }
  throw Error(Errc::Protocol, "completion content is neither a string nor a part array");
}

ScriptedMock::ScriptedMock(std::vector<std::string> script) {
  if (script.empty()) throw Error(Errc::InvalidArgument, "mock script is empty");
  scripts_[kAnySample] = std::deque<std::string>(script.begin(), script.end());
}

ScriptedMock::ScriptedMock(std::map<std::string, std::vector<std::string>> per_sample) {
  if (per_sample.empty()) throw Error(Errc::InvalidArgument, "mock script is empty");
  for (auto& [id, replies] : per_sample) {
    scripts_[id] = std::deque<std::string>(replies.begin(), replies.end());
  }
}

ScriptedMock::ScriptedMock(ScriptedMock&& other) noexcept {
  std::lock_guard lock(other.mu_);
  scripts_ = std::move(other.scripts_);
  requests_ = std::move(other.requests_);
}

ScriptedMock ScriptedMock::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open mock script '" + path + "'");
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(Errc::Decode, "mock script must be a JSON object of reply arrays");
  }
  std::map<std::string, std::vector<std::string>> scripts;
  for (const auto& [id, replies] : j.items()) {
    if (!replies.is_array()) throw Error(Errc::Decode, "mock script entry '" + id + "' is not an array");
    auto& out = scripts[id];
    for (const auto& r : replies) {
      if (!r.is_string()) throw Error(Errc::Decode, "mock replies must be strings");
      out.push_back(r.get<std::string>());
    }
  }
  return ScriptedMock(std::move(scripts));
}

std::string ScriptedMock::chat(const std::vector<Message>& history, const ChatOptions& opts) {
  validate_history(history);
  std::lock_guard lock(mu_);
  requests_.push_back({opts.sample_id, opts.attempt, history});
  auto it = scripts_.find(opts.sample_id + "#" + std::to_string(opts.attempt));
  if (it == scripts_.end()) it = scripts_.find(opts.sample_id);
  if (it == scripts_.end()) it = scripts_.find(kAnySample);
  if (it == scripts_.end() || it->second.empty()) {
    throw Error(Errc::ScriptExhausted, "mock script exhausted for sample '" + opts.sample_id + "'");
  }
  std::string reply = std::move(it->second.front());
  it->second.pop_front();
  return reply;
}

std::vector<ScriptedMock::Request> ScriptedMock::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::size_t ScriptedMock::remaining(const std::string& sample_id) const {
  std::lock_guard lock(mu_);
  const auto it = scripts_.find(sample_id);
  return it == scripts_.end() ? 0 : it->second.size();
}

bool ScriptedMock::drained() const {
  std::lock_guard lock(mu_);
  for (const auto& [id, replies] : scripts_) {
    if (!replies.empty()) return false;
  }
  return true;
}

}  // namespace tarfas::chat
