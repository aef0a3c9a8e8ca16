// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tarfas/trajectory.hpp"

namespace tarfas::reward {

using trajectory::Label;
using trajectory::Trajectory;
using vistools::kToolCount;

/// How per-tool call counts enter the diversity score.
/// LiteralMax: sum_k gamma_k * max(count_k, 1). CappedMin: sum_k gamma_k * min(count_k, 1).
enum class ClampMode { LiteralMax, CappedMin };

std::string_view to_string(ClampMode mode) noexcept;
std::optional<ClampMode> parse_clamp_mode(std::string_view text) noexcept;

struct RewardConfig {
  double beta_fast = 0.1;
  double beta_rsn = 0.5;
  double beta_tool = 0.4;
  std::array<double, kToolCount> gamma = {0.2, 0.2, 0.2, 0.2, 0.2, 0.2};
  ClampMode clamp_mode = ClampMode::CappedMin;
  int group_size = 8;
  double std_epsilon = 1e-8;

  /// Throws Config on negative weights, group_size < 2 or non-positive epsilon.
  void validate() const;
};

struct RewardBreakdown {
  double r_fast = 0.0;
  double r_rsn = 0.0;
  double f_tool = 0.0;
  double r_tool = 0.0;
  double total = 0.0;
  bool fast_fmt_ok = false;
  bool rsn_fmt_ok = false;
  std::array<int, kToolCount> per_tool_counts{};
  std::vector<bool> valid_flags;
};

/// v^(l) per reasoning turn: the turn is a schema-valid tool call whose recorded
/// execution (if any) succeeded.
std::vector<bool> valid_flags(const Trajectory& t);

/// Valid calls per tool over all reasoning turns.
std::array<int, kToolCount> tool_counts(const Trajectory& t);

/// Reasoning turns all parse, every tool call is valid, and exactly the last turn answers.
bool reasoning_format_ok(const Trajectory& t);

/// -1 on a format violation or missing fast answer; otherwise 1 if the class matches.
double score_fast(const std::optional<trajectory::FastTurn>& fast, Label label);
double score_reasoning(const Trajectory& t, Label label);
double tool_diversity(const Trajectory& t, const RewardConfig& cfg);
/// Diversity score gated by a correct final answer; an undefined final answer closes the gate.
double score_tool(const Trajectory& t, Label label, const RewardConfig& cfg);
RewardBreakdown total_reward(const Trajectory& t, Label label, const RewardConfig& cfg);

/// (R_i - mean) / std with the population std; all zeros when std < epsilon.
/// Throws GroupTooSmall for fewer than two rewards.
std::vector<double> group_advantages(std::span<const double> rewards, double std_epsilon = 1e-8);

struct SingleToolBreakdown {
  double fmt = 0.0;
  double acc = 0.0;
  double tool_bonus = 0.0;
  double total = 0.0;
};

/// Single-tool baseline: fmt + acc + 1{valid ZoomIn call} * 1{acc > 0}, where any
/// other tool counts as an invalid call.
SingleToolBreakdown st_grpo_breakdown(const Trajectory& t, Label label);
double st_grpo_reward(const Trajectory& t, Label label);

/// Tight bounds on total_reward for trajectories with at most `max_turns` reasoning turns.
double max_total_reward(const RewardConfig& cfg, std::size_t max_turns);
double min_total_reward(const RewardConfig& cfg);

}  // namespace tarfas::reward
