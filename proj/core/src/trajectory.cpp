// SPDX-License-Identifier: Apache-2.0
#include "tarfas/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "tarfas/error.hpp"

namespace tarfas::trajectory {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 6> kReservedTags = {
    "<think>", "</think>", "<tool_call>", "</tool_call>", "<answer>", "</answer>"};

bool is_space(char c) noexcept { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string_view ltrim(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  return s;
}

bool consume(std::string_view& s, std::string_view prefix) noexcept {
  if (s.substr(0, prefix.size()) != prefix) return false;
  s.remove_prefix(prefix.size());
  return true;
}

// Splits `s` at the first `close`; returns false when the tag never closes.
bool take_until(std::string_view& s, std::string_view close, std::string_view& inner) noexcept {
  const auto pos = s.find(close);
  if (pos == std::string_view::npos) return false;
  inner = s.substr(0, pos);
  s.remove_prefix(pos + close.size());
  return true;
}

bool contains_markup(std::string_view s) noexcept {
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] != '<') continue;
    const char next = s[i + 1];
    if (next == '/' || std::isalpha(static_cast<unsigned char>(next))) return true;
  }
  return false;
}

bool contains_reserved(std::string_view s) noexcept {
  return std::any_of(kReservedTags.begin(), kReservedTags.end(),
                     [&](std::string_view tag) { return s.find(tag) != std::string_view::npos; });
}

FormatViolation violation(ViolationKind kind, std::string detail) {
  return FormatViolation{kind, std::move(detail)};
}

Parsed<SubAnnotation> parse_tool_payload(std::string think, std::string_view payload) {
  json j = json::parse(payload.begin(), payload.end(), nullptr, false);
  if (j.is_discarded()) return violation(ViolationKind::BadJson, "tool_call payload is not valid JSON");
  if (!j.is_object()) return violation(ViolationKind::BadJson, "tool_call payload is not an object");
  const auto name_it = j.find("name");
  if (name_it == j.end() || !name_it->is_string()) {
    return violation(ViolationKind::BadJson, "tool_call payload lacks a string \"name\"");
  }
  const auto tool = vistools::parse_tool_name(name_it->get_ref<const std::string&>());
  if (!tool) {
    return violation(ViolationKind::InvalidTool, "unknown tool '" + name_it->get<std::string>() + "'");
  }
  const auto args_it = j.find("arguments");
  if (args_it == j.end() || !args_it->is_object()) {
    return violation(ViolationKind::BadJson, "tool_call payload lacks an \"arguments\" object");
  }
  if (j.size() != 2) {
    return violation(ViolationKind::BadJson, "tool_call payload has keys besides name/arguments");
  }
  try {
    vistools::validate_arguments(*tool, *args_it);
  } catch (const Error& e) {
    return violation(ViolationKind::InvalidTool, e.what());
  }
  return SubAnnotation{std::move(think), ToolCall{*tool, *args_it}};
}

ordered_json as_ordered(const json& j) { return ordered_json::parse(j.dump()); }

ordered_json violation_json(const FormatViolation& v) {
  return ordered_json{{"kind", to_string(v.kind)}, {"detail", v.detail}};
}

std::string require_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(Errc::Decode, std::string("trajectory record field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(Errc::Decode, std::string("trajectory record field '") + key + "' must be a string or null");
  }
  return it->get<std::string>();
}

const json& require_array(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array()) {
    throw Error(Errc::Decode, std::string("trajectory record field '") + key + "' must be an array");
  }
  return *it;
}

}  // namespace

std::string_view to_string(Label label) noexcept { return label == Label::Real ? "Real" : "Spoof"; }

std::optional<Label> parse_label(std::string_view text) noexcept {
  if (text == "Real") return Label::Real;
  if (text == "Spoof") return Label::Spoof;
  return std::nullopt;
}

std::string_view to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::BadTags: return "BadTags";
    case ViolationKind::BadJson: return "BadJson";
    case ViolationKind::InvalidTool: return "InvalidTool";
    case ViolationKind::BadAnswerToken: return "BadAnswerToken";
  }
  return "BadTags";
}

std::optional<ViolationKind> parse_violation_kind(std::string_view text) noexcept {
  for (auto kind : {ViolationKind::BadTags, ViolationKind::BadJson, ViolationKind::InvalidTool,
                    ViolationKind::BadAnswerToken}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

std::string_view to_string(Status status) noexcept {
  switch (status) {
    case Status::Answered: return "answered";
    case Status::Unterminated: return "unterminated";
    case Status::FormatFailed: return "format_failed";
  }
  return "answered";
}

Parsed<FastAnswer> parse_fast(std::string_view text) noexcept {
  std::string_view s = trim(text);
  FastAnswer out;
  if (consume(s, "<Real>")) {
    out.cls = Label::Real;
  } else if (consume(s, "<Spoof>")) {
    out.cls = Label::Spoof;
  } else {
    if (!s.empty() && s.front() == '<' && !s.starts_with("<reason>") &&
        s.find('>') != std::string_view::npos) {
      return violation(ViolationKind::BadAnswerToken, "fast answer must start with <Real> or <Spoof>");
    }
    return violation(ViolationKind::BadTags, "fast answer must start with a class token");
  }
  s = ltrim(s);
  std::string_view reason;
  if (!consume(s, "<reason>") || !take_until(s, "</reason>", reason)) {
    return violation(ViolationKind::BadTags, "fast answer needs a <reason>...</reason> block");
  }
  if (contains_markup(reason)) {
    return violation(ViolationKind::BadTags, "reason block contains nested tags");
  }
  if (!s.empty()) return violation(ViolationKind::BadTags, "trailing content after </reason>");
  out.reason = std::string(reason);
  return out;
}

Parsed<SubAnnotation> parse_turn(std::string_view text) noexcept {
  std::string_view s = trim(text);
  std::string_view think;
  if (!consume(s, "<think>") || !take_until(s, "</think>", think)) {
    return violation(ViolationKind::BadTags, "turn must start with <think>...</think>");
  }
  if (contains_reserved(think)) {
    return violation(ViolationKind::BadTags, "think block contains reserved tags");
  }
  if (trim(think).empty()) return violation(ViolationKind::BadTags, "think block is empty");
  s = ltrim(s);

  if (consume(s, "<tool_call>")) {
    std::string_view payload;
    if (!take_until(s, "</tool_call>", payload)) {
      return violation(ViolationKind::BadTags, "unterminated <tool_call>");
    }
    if (!s.empty()) {
      return violation(ViolationKind::BadTags, "content after </tool_call>");
    }
    return parse_tool_payload(std::string(think), payload);
  }
  if (consume(s, "<answer>")) {
    std::string_view token;
    if (!take_until(s, "</answer>", token)) {
      return violation(ViolationKind::BadTags, "unterminated <answer>");
    }
    if (!s.empty()) return violation(ViolationKind::BadTags, "content after </answer>");
    token = trim(token);
    if (token == "<Real>") return SubAnnotation{std::string(think), FinalAnswer{Label::Real}};
    if (token == "<Spoof>") return SubAnnotation{std::string(think), FinalAnswer{Label::Spoof}};
    return violation(ViolationKind::BadAnswerToken, "answer must be exactly <Real> or <Spoof>");
  }
  return violation(ViolationKind::BadTags, "turn needs either <tool_call> or <answer> after </think>");
}

std::string format_fast(const FastAnswer& fast) {
  return "<" + std::string(to_string(fast.cls)) + "><reason>" + fast.reason + "</reason>";
}

std::string format_tool_call(const ToolCall& call) {
  ordered_json payload{{"name", vistools::tool_name(call.tool)}, {"arguments", as_ordered(call.arguments)}};
  return payload.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string format_turn(const SubAnnotation& turn) {
  std::string out = "<think>" + turn.think + "</think>";
  if (const auto* call = std::get_if<ToolCall>(&turn.action)) {
    out += "<tool_call>" + format_tool_call(*call) + "</tool_call>";
  } else {
    out += "<answer><" + std::string(to_string(std::get<FinalAnswer>(turn.action).cls)) + "></answer>";
  }
  return out;
}

std::optional<Label> Trajectory::final_cls() const {
  if (turns.empty()) return std::nullopt;
  const auto* sub = std::get_if<SubAnnotation>(&turns.back().parsed);
  if (sub == nullptr) return std::nullopt;
  if (const auto* answer = std::get_if<FinalAnswer>(&sub->action)) return answer->cls;
  return std::nullopt;
}

const ToolResult* Trajectory::result_for_turn(std::size_t turn) const {
  for (const auto& r : tool_results) {
    if (r.turn == turn) return &r;
  }
  return nullptr;
}

void validate(const Trajectory& t, std::size_t max_turns) {
  if (t.turns.size() > max_turns) {
    throw Error(Errc::InvalidArgument, "trajectory exceeds the turn limit");
  }
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    const auto* sub = std::get_if<SubAnnotation>(&t.turns[i].parsed);
    if (sub == nullptr) continue;
    if (!sub->is_tool_call()) {
      if (i + 1 != t.turns.size()) {
        throw Error(Errc::InvalidArgument, "final answer must terminate the turn list");
      }
      continue;
    }
    const ToolResult* result = t.result_for_turn(i);
    if (result == nullptr || result->tool != std::get<ToolCall>(sub->action).tool) {
      throw Error(Errc::InvalidArgument, "tool call at turn " + std::to_string(i) + " has no matching result");
    }
  }
}

ordered_json trajectory_to_json(const Trajectory& t) {
  ordered_json j;
  j["sample_id"] = t.sample_id;
  j["label"] = to_string(t.label);
  j["hint"] = t.hint ? ordered_json(*t.hint) : ordered_json(nullptr);
  j["status"] = to_string(t.status);
  if (t.fast) {
    ordered_json fast{{"raw", t.fast->raw}};
    if (const auto* f = std::get_if<FastAnswer>(&t.fast->parsed)) {
      fast["cls"] = to_string(f->cls);
      fast["reason"] = f->reason;
    } else {
      fast["violation"] = violation_json(std::get<FormatViolation>(t.fast->parsed));
    }
    j["fast"] = std::move(fast);
  } else {
    j["fast"] = nullptr;
  }
  auto turns = ordered_json::array();
  for (const auto& turn : t.turns) {
    ordered_json tj{{"raw", turn.raw}};
    tj["rejected_raw"] = turn.rejected_raw ? ordered_json(*turn.rejected_raw) : ordered_json(nullptr);
    if (const auto* sub = std::get_if<SubAnnotation>(&turn.parsed)) {
      tj["think"] = sub->think;
      if (const auto* call = std::get_if<ToolCall>(&sub->action)) {
        tj["tool_call"] = ordered_json{{"name", vistools::tool_name(call->tool)},
                                       {"arguments", as_ordered(call->arguments)}};
      } else {
        tj["answer"] = to_string(std::get<FinalAnswer>(sub->action).cls);
      }
    } else {
      tj["violation"] = violation_json(std::get<FormatViolation>(turn.parsed));
    }
    turns.push_back(std::move(tj));
  }
  j["turns"] = std::move(turns);
  auto results = ordered_json::array();
  for (const auto& r : t.tool_results) {
    ordered_json rj;
    rj["turn"] = r.turn;
    rj["tool"] = vistools::tool_name(r.tool);
    rj["ok"] = r.ok;
    rj["error"] = r.ok ? ordered_json(nullptr) : ordered_json(r.error);
    rj["render"] = r.render;
    rj["digest"] = r.digest;
    rj["expert_p"] = r.expert_p ? ordered_json(*r.expert_p) : ordered_json(nullptr);
    results.push_back(std::move(rj));
  }
  j["tool_results"] = std::move(results);
  const auto final_cls = t.final_cls();
  j["final_cls"] = final_cls ? ordered_json(to_string(*final_cls)) : ordered_json(nullptr);
  j["final_logit"] = t.final_logit ? ordered_json(*t.final_logit) : ordered_json(nullptr);
  return j;
}

std::string serialize_trajectory(const Trajectory& t) {
  return trajectory_to_json(t).dump(-1, ' ', false, json::error_handler_t::replace);
}

Trajectory trajectory_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::Decode, "trajectory record must be a JSON object");
  Trajectory t;
  t.sample_id = require_string(j, "sample_id");
  const auto label = parse_label(require_string(j, "label"));
  if (!label) throw Error(Errc::Decode, "trajectory label must be Real or Spoof");
  t.label = *label;
  t.hint = optional_string(j, "hint");

  const std::string status = require_string(j, "status");
  if (status == "answered") {
    t.status = Status::Answered;
  } else if (status == "unterminated") {
    t.status = Status::Unterminated;
  } else if (status == "format_failed") {
    t.status = Status::FormatFailed;
  } else {
    throw Error(Errc::Decode, "unknown trajectory status '" + status + "'");
  }

  if (const auto it = j.find("fast"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw Error(Errc::Decode, "fast must be an object or null");
    FastTurn fast;
    fast.raw = require_string(*it, "raw");
    fast.parsed = parse_fast(fast.raw);
    t.fast = std::move(fast);
  }

  for (const auto& tj : require_array(j, "turns")) {
    if (!tj.is_object()) throw Error(Errc::Decode, "turn entries must be objects");
    Turn turn;
    turn.raw = require_string(tj, "raw");
    turn.rejected_raw = optional_string(tj, "rejected_raw");
    turn.parsed = parse_turn(turn.raw);
    t.turns.push_back(std::move(turn));
  }

  for (const auto& rj : require_array(j, "tool_results")) {
    if (!rj.is_object()) throw Error(Errc::Decode, "tool_results entries must be objects");
    ToolResult r;
    const auto turn_it = rj.find("turn");
    if (turn_it == rj.end() || !turn_it->is_number_unsigned()) {
      throw Error(Errc::Decode, "tool result 'turn' must be a non-negative integer");
    }
    r.turn = turn_it->get<std::size_t>();
    const auto tool = vistools::parse_tool_name(require_string(rj, "tool"));
    if (!tool) throw Error(Errc::Decode, "tool result names an unknown tool");
    r.tool = *tool;
    const auto ok_it = rj.find("ok");
    if (ok_it == rj.end() || !ok_it->is_boolean()) throw Error(Errc::Decode, "tool result 'ok' must be a boolean");
    r.ok = ok_it->get<bool>();
    r.error = optional_string(rj, "error").value_or("");
    r.render = require_string(rj, "render");
    r.digest = require_string(rj, "digest");
    if (const auto p = rj.find("expert_p"); p != rj.end() && !p->is_null()) {
      if (!p->is_number()) throw Error(Errc::Decode, "expert_p must be a number or null");
      r.expert_p = p->get<double>();
    }
    t.tool_results.push_back(std::move(r));
  }

  if (const auto it = j.find("final_logit"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) throw Error(Errc::Decode, "final_logit must be a number or null");
    t.final_logit = it->get<double>();
  }
  return t;
}

Trajectory parse_trajectory(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) throw Error(Errc::Decode, "trajectory record is not valid JSON");
  return trajectory_from_json(j);
}

}  // namespace tarfas::trajectory
