// SPDX-License-Identifier: Apache-2.0
#include "tarfas/reward.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "tarfas/error.hpp"

namespace tarfas::reward {

using trajectory::FastAnswer;
using trajectory::FinalAnswer;
using trajectory::SubAnnotation;
using vistools::ToolCall;
using vistools::ToolId;

std::string_view to_string(ClampMode mode) noexcept {
  return mode == ClampMode::LiteralMax ? "literal_max" : "capped_min";
}

std::optional<ClampMode> parse_clamp_mode(std::string_view text) noexcept {
  if (text == "literal_max") return ClampMode::LiteralMax;
  if (text == "capped_min") return ClampMode::CappedMin;
  return std::nullopt;
}

void RewardConfig::validate() const {
  if (beta_fast < 0 || beta_rsn < 0 || beta_tool < 0) {
    throw Error(Errc::Config, "reward betas must be non-negative");
  }
  if (std::any_of(gamma.begin(), gamma.end(), [](double g) { return !(g >= 0); })) {
    throw Error(Errc::Config, "tool weights must be non-negative");
  }
  if (group_size < 2) throw Error(Errc::Config, "group_size must be at least 2");
  if (!(std_epsilon > 0)) throw Error(Errc::Config, "std_epsilon must be positive");
}

std::vector<bool> valid_flags(const Trajectory& t) {
  std::vector<bool> flags(t.turns.size(), false);
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    const auto* sub = std::get_if<SubAnnotation>(&t.turns[i].parsed);
    if (sub == nullptr || !sub->is_tool_call()) continue;
    const auto* result = t.result_for_turn(i);
    flags[i] = result == nullptr || result->ok;
  }
  return flags;
}

std::array<int, kToolCount> tool_counts(const Trajectory& t) {
  std::array<int, kToolCount> counts{};
  const auto flags = valid_flags(t);
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    if (!flags[i]) continue;
    const auto& sub = std::get<SubAnnotation>(t.turns[i].parsed);
    ++counts[vistools::index_of(std::get<ToolCall>(sub.action).tool)];
  }
  return counts;
}

bool reasoning_format_ok(const Trajectory& t) {
  if (t.turns.empty()) return false;
  const auto flags = valid_flags(t);
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    const auto* sub = std::get_if<SubAnnotation>(&t.turns[i].parsed);
    if (sub == nullptr) return false;
    const bool last = i + 1 == t.turns.size();
    if (sub->is_tool_call()) {
      if (last || !flags[i]) return false;
    } else if (!last) {
      return false;
    }
  }
  return true;
}

double score_fast(const std::optional<trajectory::FastTurn>& fast, Label label) {
  if (!fast) return -1.0;
  const auto* answer = std::get_if<FastAnswer>(&fast->parsed);
  if (answer == nullptr) return -1.0;
  return answer->cls == label ? 1.0 : 0.0;
}

double score_reasoning(const Trajectory& t, Label label) {
  if (!reasoning_format_ok(t)) return -1.0;
  return t.final_cls() == label ? 1.0 : 0.0;
}

double tool_diversity(const Trajectory& t, const RewardConfig& cfg) {
  const auto counts = tool_counts(t);
  double score = 0.0;
  for (std::size_t k = 0; k < kToolCount; ++k) {
    const int term = cfg.clamp_mode == ClampMode::LiteralMax ? std::max(counts[k], 1)
                                                              : std::min(counts[k], 1);
    score += cfg.gamma[k] * term;
  }
  return score;
}

double score_tool(const Trajectory& t, Label label, const RewardConfig& cfg) {
  if (t.final_cls() != label) return 0.0;
  return tool_diversity(t, cfg);
}

RewardBreakdown total_reward(const Trajectory& t, Label label, const RewardConfig& cfg) {
  RewardBreakdown out;
  out.r_fast = score_fast(t.fast, label);
  out.fast_fmt_ok = out.r_fast > -1.0;
  out.rsn_fmt_ok = reasoning_format_ok(t);
  out.r_rsn = out.rsn_fmt_ok ? (t.final_cls() == label ? 1.0 : 0.0) : -1.0;
  out.f_tool = tool_diversity(t, cfg);
  out.r_tool = t.final_cls() == label ? out.f_tool : 0.0;
  out.total = cfg.beta_fast * out.r_fast + cfg.beta_rsn * out.r_rsn + cfg.beta_tool * out.r_tool;
  out.per_tool_counts = tool_counts(t);
  out.valid_flags = valid_flags(t);
  return out;
}

std::vector<double> group_advantages(std::span<const double> rewards, double std_epsilon) {
  if (rewards.size() < 2) throw Error(Errc::GroupTooSmall, "advantage groups need at least two rewards");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double stddev = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (!(stddev >= std_epsilon)) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / stddev;
  return out;
}

SingleToolBreakdown st_grpo_breakdown(const Trajectory& t, Label label) {
  SingleToolBreakdown out;
  const auto flags = valid_flags(t);
  bool format_ok = reasoning_format_ok(t);
  bool zoom_used = false;
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    const auto* sub = std::get_if<SubAnnotation>(&t.turns[i].parsed);
    if (sub == nullptr || !sub->is_tool_call()) continue;
    if (std::get<ToolCall>(sub->action).tool != ToolId::ZoomIn) {
      format_ok = false;
    } else if (flags[i]) {
      zoom_used = true;
    }
  }
  out.fmt = format_ok ? 0.0 : -1.0;
  out.acc = t.final_cls() == label ? 1.0 : 0.0;
  out.tool_bonus = (zoom_used && out.acc > 0.0) ? 1.0 : 0.0;
  out.total = out.fmt + out.acc + out.tool_bonus;
  return out;
}

double st_grpo_reward(const Trajectory& t, Label label) { return st_grpo_breakdown(t, label).total; }

double max_total_reward(const RewardConfig& cfg, std::size_t max_turns) {
  // A rewarded rollout ends in an answer, leaving max_turns - 1 turns for tool calls.
  const std::size_t calls = max_turns == 0 ? 0 : max_turns - 1;
  auto gamma = cfg.gamma;
  std::sort(gamma.begin(), gamma.end(), std::greater<>());
  double best_tool = 0.0;
  if (cfg.clamp_mode == ClampMode::CappedMin) {
    const std::size_t distinct = std::min(calls, kToolCount);
    best_tool = std::accumulate(gamma.begin(), gamma.begin() + static_cast<std::ptrdiff_t>(distinct), 0.0);
  } else {
    best_tool = std::accumulate(gamma.begin(), gamma.end(), 0.0);
    if (calls > 0) best_tool += static_cast<double>(calls - 1) * gamma.front();
  }
  return cfg.beta_fast + cfg.beta_rsn + cfg.beta_tool * best_tool;
}

double min_total_reward(const RewardConfig& cfg) { return -cfg.beta_fast - cfg.beta_rsn; }

}  // namespace tarfas::reward
