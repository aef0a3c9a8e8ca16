// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tarfas/message.hpp"

namespace tarfas::chat {

/// Connection and decoding settings for a chat-completions endpoint.
/// The API key is read from the environment variable named by api_key_env,
/// never from the config itself.
struct ClientConfig {
  std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model;
  std::string api_key_env = "TARFAS_API_KEY";
  std::map<std::string, std::string> headers;
  double timeout_s = 60.0;
  int max_retries = 3;
  double backoff_base_s = 1.0;
  double backoff_max_s = 30.0;
  /// 0.3 for annotation; rollouts usually pass 1.0 per call.
  double temperature = 0.3;
  std::optional<int> max_tokens;
  /// Admission limit shared by all callers of one client; 0 disables it.
  double requests_per_minute = 0.0;
  nlohmann::json extra_params = nlohmann::json::object();

  /// Throws Config on timeout <= 0, negative retries or backoff, or an unparsable endpoint.
  void validate() const;
};

/// Per-call context. `sample_id` and `attempt` let test doubles route replies;
/// `seed` feeds the provider's sampling seed and the retry jitter.
struct ChatOptions {
  std::string sample_id;
  int attempt = 1;
  std::uint64_t seed = 0;
  std::optional<double> temperature;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  /// Returns the assistant completion for `history` (which ends with a user turn).
  /// Throws Transport, Protocol, Auth, ScriptExhausted or InvalidArgument.
  virtual std::string chat(const std::vector<Message>& history, const ChatOptions& opts) = 0;
};

/// Token bucket: capacity 1, refilled at requests_per_minute / 60 tokens per second.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  double per_second_;
  Clock::time_point next_free_;
  std::mutex mu_;
};

/// Request body for one chat call.
nlohmann::json build_request(const std::vector<Message>& history, const ClientConfig& cfg,
                             const ChatOptions& opts);

/// Extracts choices[0].message.content (string or text-part array). Throws Protocol.
std::string parse_completion(std::string_view body);

/// Blocking HTTP(S) backend with retries on transport failures, 429 and 5xx.
class HttpChatClient final : public ChatClient {
 public:
  using Sleeper = std::function<void(std::chrono::duration<double>)>;

  explicit HttpChatClient(ClientConfig cfg, Sleeper sleeper = {});
  std::string chat(const std::vector<Message>& history, const ChatOptions& opts) override;

  const ClientConfig& config() const noexcept { return cfg_; }

 private:
  ClientConfig cfg_;
  Sleeper sleeper_;
  RateLimiter limiter_;
  std::string origin_;
  std::string path_;
};

/// Replays canned completions in order and records every request.
/// Replies are looked up under "<sample id>#<attempt>", then "<sample id>", then "*".
class ScriptedMock final : public ChatClient {
 public:
  static constexpr const char* kAnySample = "*";

  struct Request {
    std::string sample_id;
    int attempt = 1;
    std::vector<Message> history;
  };

  explicit ScriptedMock(std::vector<std::string> script);
  explicit ScriptedMock(std::map<std::string, std::vector<std::string>> per_sample);
  ScriptedMock(ScriptedMock&& other) noexcept;

  /// Reads {"<sample id or *>": ["reply", ...], ...}. Throws Io / Decode.
  static ScriptedMock from_file(const std::string& path);

  std::string chat(const std::vector<Message>& history, const ChatOptions& opts) override;

  std::vector<Request> requests() const;
  std::size_t remaining(const std::string& sample_id) const;
  bool drained() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::deque<std::string>> scripts_;
  std::vector<Request> requests_;
};

}  // namespace tarfas::chat
