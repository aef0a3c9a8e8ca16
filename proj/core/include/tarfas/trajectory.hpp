// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tarfas/vistools.hpp"

namespace tarfas::trajectory {

using vistools::ToolCall;
using vistools::ToolId;

enum class Label { Real, Spoof };

std::string_view to_string(Label label) noexcept;
std::optional<Label> parse_label(std::string_view text) noexcept;

enum class ViolationKind { BadTags, BadJson, InvalidTool, BadAnswerToken };

std::string_view to_string(ViolationKind kind) noexcept;
std::optional<ViolationKind> parse_violation_kind(std::string_view text) noexcept;

/// Model output that does not follow the required format. This is a value,
/// not an error: rewards turn it into a -1 signal.
struct FormatViolation {
  ViolationKind kind = ViolationKind::BadTags;
  std::string detail;

  friend bool operator==(const FormatViolation&, const FormatViolation&) = default;
};

struct FastAnswer {
  Label cls = Label::Real;
  std::string reason;

  friend bool operator==(const FastAnswer&, const FastAnswer&) = default;
};

struct FinalAnswer {
  Label cls = Label::Real;

  friend bool operator==(const FinalAnswer&, const FinalAnswer&) = default;
};

struct SubAnnotation {
  std::string think;
  std::variant<ToolCall, FinalAnswer> action;

  bool is_tool_call() const noexcept { return std::holds_alternative<ToolCall>(action); }
  friend bool operator==(const SubAnnotation&, const SubAnnotation&) = default;
};

template <typename T>
using Parsed = std::variant<T, FormatViolation>;

/// `<Real>` or `<Spoof>` followed by `<reason>...</reason>`. Surrounding
/// whitespace is tolerated, anything else is a violation. Never throws.
Parsed<FastAnswer> parse_fast(std::string_view text) noexcept;

/// `<think>T</think>` then either `<tool_call>{"name":..,"arguments":{..}}</tool_call>`
/// or `<answer><Real></answer>` / `<answer><Spoof></answer>`. Whitespace between
/// top-level tags is tolerated. Never throws.
Parsed<SubAnnotation> parse_turn(std::string_view text) noexcept;

std::string format_fast(const FastAnswer& fast);
std::string format_turn(const SubAnnotation& turn);
std::string format_tool_call(const ToolCall& call);

enum class Status { Answered, Unterminated, FormatFailed };

std::string_view to_string(Status status) noexcept;

struct Turn {
  std::string raw;
  Parsed<SubAnnotation> parsed;
  /// First reply of this turn when it was rejected and the model was asked again.
  std::optional<std::string> rejected_raw;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct FastTurn {
  std::string raw;
  Parsed<FastAnswer> parsed;

  friend bool operator==(const FastTurn&, const FastTurn&) = default;
};

/// Execution record for the tool call issued at reasoning turn `turn`.
struct ToolResult {
  std::size_t turn = 0;
  ToolId tool = ToolId::ZoomIn;
  bool ok = true;
  std::string error;
  std::string render;
  std::string digest;
  std::optional<double> expert_p;

  friend bool operator==(const ToolResult&, const ToolResult&) = default;
};

struct Trajectory {
  std::string sample_id;
  Label label = Label::Real;
  std::optional<std::string> hint;
  std::optional<FastTurn> fast;
  std::vector<Turn> turns;
  std::vector<ToolResult> tool_results;
  Status status = Status::Answered;
  std::optional<double> final_logit;

  /// The answer of the last reasoning turn, if that turn parsed as a final answer.
  std::optional<Label> final_cls() const;
  const ToolResult* result_for_turn(std::size_t turn) const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Turn bound and result pairing checks. Throws InvalidArgument.
void validate(const Trajectory& t, std::size_t max_turns);

/// One-line JSON with fixed key order.
std::string serialize_trajectory(const Trajectory& t);
nlohmann::ordered_json trajectory_to_json(const Trajectory& t);

/// Inverse of serialize_trajectory. Turn and fast-answer parses are re-derived
/// from the stored raw text. Throws Decode on malformed records.
Trajectory parse_trajectory(std::string_view line);
Trajectory trajectory_from_json(const nlohmann::json& j);

}  // namespace tarfas::trajectory
