// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <random>
#include <regex>
#include <thread>

#include "tarfas/error.hpp"
#include "tarfas/mllm_client.hpp"

namespace tarfas::chat {

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpChatClient::HttpChatClient(ClientConfig cfg, Sleeper sleeper)
    : cfg_(std::move(cfg)), sleeper_(std::move(sleeper)), limiter_(cfg_.requests_per_minute) {
  cfg_.validate();
  static const std::regex kUrl(R"(^(https?://[^/:\s]+(?::\d+)?)(/\S*)?$)");
  std::smatch m;
  std::regex_match(cfg_.endpoint, m, kUrl);
  origin_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
  if (!sleeper_) {
    sleeper_ = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
  }
}

std::string HttpChatClient::chat(const std::vector<Message>& history, const ChatOptions& opts) {
  validate_history(history);
  const std::string body = build_request(history, cfg_, opts).dump(-1, ' ', false,
                                                                    nlohmann::json::error_handler_t::replace);
  httplib::Headers headers;
  for (const auto& [k, v] : cfg_.headers) headers.emplace(k, v);
  if (!cfg_.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  httplib::Client client(origin_);
  const auto secs = std::chrono::duration<double>(cfg_.timeout_s);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(secs);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  std::mt19937_64 jitter_rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  std::string last_failure;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double delay = std::min(cfg_.backoff_max_s,
                                    cfg_.backoff_base_s * std::pow(2.0, attempt - 1) * jitter(jitter_rng));
      sleeper_(std::chrono::duration<double>(delay));
    }
    limiter_.acquire();
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_failure = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
      throw Error(Errc::Auth, "endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
    }
    if (retryable_status(status)) {
      last_failure = "HTTP " + std::to_string(status);
      continue;
    }
    if (status < 200 || status >= 300) {
      throw Error(Errc::Protocol, "endpoint returned HTTP " + std::to_string(status) + ": " +
                                      res->body.substr(0, 200));
    }
    return parse_completion(res->body);
  }
  throw Error(Errc::Transport, "chat request failed after " + std::to_string(cfg_.max_retries + 1) +
                                   " attempts: " + last_failure);
}

}  // namespace tarfas::chat
