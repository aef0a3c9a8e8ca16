// SPDX-License-Identifier: Apache-2.0
#include "tarfas/annotator.hpp"

#include <fstream>

#include "tarfas/error.hpp"
#include "tarfas/prompts.hpp"

namespace tarfas::annotator {

using nlohmann::json;
using nlohmann::ordered_json;
using trajectory::SubAnnotation;
using trajectory::ToolResult;
using trajectory::Turn;

Sample sample_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::Decode, "manifest row must be a JSON object");
  auto str = [&](const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string() || it->get_ref<const std::string&>().empty()) {
      throw Error(Errc::Decode, std::string("manifest field '") + key + "' must be a non-empty string");
    }
    return it->get<std::string>();
  };
  Sample s;
  s.id = str("id");
  s.image = str("image");
  const auto label = trajectory::parse_label(str("label"));
  if (!label) throw Error(Errc::Decode, "manifest label must be Real or Spoof");
  s.label = *label;
  if (const auto it = j.find("spoof_type"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(Errc::Decode, "manifest spoof_type must be a string or null");
    s.spoof_type = it->get<std::string>();
  }
  if (s.label == Label::Real && s.spoof_type) {
    throw Error(Errc::Decode, "sample '" + s.id + "' is Real but carries a spoof_type");
  }
  return s;
}

ordered_json sample_to_json(const Sample& s) {
  ordered_json j;
  j["id"] = s.id;
  j["image"] = s.image.generic_string();
  j["label"] = trajectory::to_string(s.label);
  j["spoof_type"] = s.spoof_type ? ordered_json(*s.spoof_type) : ordered_json(nullptr);
  return j;
}

std::vector<Sample> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open manifest '" + path.string() + "'");
  const auto base = path.parent_path();
  std::vector<Sample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(Errc::Decode, path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    try {
      Sample s = sample_from_json(j);
      if (s.image.is_relative()) s.image = base / s.image;
      samples.push_back(std::move(s));
    } catch (const Error& e) {
      throw Error(Errc::Decode, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return samples;
}

std::string hint_for(const Sample& s) {
  if (s.label == Label::Real) return "real person";
  return s.spoof_type.value_or("spoof attack");
}

std::string tool_error_notice(std::string_view tool, std::string_view message) {
  return "The call to " + std::string(tool) + " failed: " + std::string(message) +
         ". Choose another tool or give the final answer.";
}

namespace {

std::string render_name(const Sample& s, int attempt, std::size_t turn, vistools::ToolId tool) {
  return s.id + "/a" + std::to_string(attempt) + "_t" + std::to_string(turn) + "_" +
         std::string(vistools::tool_name(tool)) + ".png";
}

}  // namespace

Trajectory annotate_sample(const Sample& s, const imaging::Raster& image, chat::ChatClient& client,
                           const expert::ExpertSet& experts, const AnnotateConfig& cfg,
                           const chat::ChatOptions& opts) {
  expert::require_complete(experts);
  if (cfg.l_max == 0) throw Error(Errc::InvalidArgument, "l_max must be at least 1");

  auto input = std::make_shared<const imaging::Raster>(image);
  Trajectory t;
  t.sample_id = s.id;
  t.label = s.label;
  t.hint = hint_for(s);

  prompts::PromptContext first;
  first.mode = prompts::Mode::Annotation;
  first.image = input;
  first.image_source = s.image.generic_string();
  first.hint = t.hint;

  std::vector<chat::Message> history;
  history.push_back(chat::Message::system(prompts::annotation_system_prompt()));
  history.push_back(chat::Message::user(prompts::build_prompts(prompts::Stage::FirstQuery, first)));

  while (t.turns.size() < cfg.l_max) {
    Turn turn;
    turn.raw = client.chat(history, opts);
    turn.parsed = trajectory::parse_turn(turn.raw);
    if (std::holds_alternative<trajectory::FormatViolation>(turn.parsed) && cfg.resend_on_format_error) {
      history.push_back(chat::Message::assistant(turn.raw));
      history.push_back(
          chat::Message::user(prompts::build_prompts(prompts::Stage::FormatDecl, prompts::PromptContext{})));
      turn.rejected_raw = std::move(turn.raw);
      turn.raw = client.chat(history, opts);
      turn.parsed = trajectory::parse_turn(turn.raw);
    }
    history.push_back(chat::Message::assistant(turn.raw));
    const std::size_t index = t.turns.size();
    t.turns.push_back(turn);

    const auto* sub = std::get_if<SubAnnotation>(&turn.parsed);
    if (sub == nullptr) {
      t.status = trajectory::Status::FormatFailed;
      return t;
    }
    if (!sub->is_tool_call()) {
      t.status = trajectory::Status::Answered;
      return t;
    }

    const auto& call = std::get<vistools::ToolCall>(sub->action);
    ToolResult result;
    result.turn = index;
    result.tool = call.tool;
    std::vector<chat::Part> next;
    try {
      auto render = std::make_shared<const imaging::Raster>(vistools::dispatch(call, image));
      result.digest = imaging::raster_digest(*render);
      const std::string name = render_name(s, opts.attempt, index, call.tool);
      if (cfg.render_dir) {
        const auto target = *cfg.render_dir / name;
        std::filesystem::create_directories(target.parent_path());
        imaging::encode_png(*render, target);
        result.render = name;
      }
      prompts::PromptContext ctx;
      ctx.mode = prompts::Mode::Annotation;
      ctx.image = render;
      ctx.image_source = name;
      if (call.tool != vistools::ToolId::ZoomIn) {
        const double p = expert::predict(experts.at(call.tool), *render);
        result.expert_p = p;
        ctx.guidance = expert::guidance_text(call.tool, p);
      }
      next = prompts::build_prompts(prompts::Stage::ToolResult, ctx);
    } catch (const Error& e) {
      if (e.code() == Errc::Io) throw;
      result.ok = false;
      result.error = e.what();
      result.digest.clear();
      result.expert_p.reset();
      next = {chat::TextPart{tool_error_notice(vistools::tool_name(call.tool), e.what())}};
    }
    t.tool_results.push_back(std::move(result));
    if (t.turns.size() >= cfg.l_max) break;
    history.push_back(chat::Message::user(std::move(next)));
  }
  t.status = trajectory::Status::Unterminated;
  return t;
}

Trajectory annotate_sample(const Sample& s, chat::ChatClient& client, const expert::ExpertSet& experts,
                           const AnnotateConfig& cfg, const chat::ChatOptions& opts) {
  return annotate_sample(s, imaging::load_image(s.image), client, experts, cfg, opts);
}

std::vector<std::size_t> provenance_mismatches(const Trajectory& t, const imaging::Raster& image) {
  std::vector<std::size_t> bad;
  for (const auto& r : t.tool_results) {
    if (!r.ok) continue;
    const auto* sub = r.turn < t.turns.size() ? std::get_if<SubAnnotation>(&t.turns[r.turn].parsed) : nullptr;
    if (sub == nullptr || !sub->is_tool_call()) {
      bad.push_back(r.turn);
      continue;
    }
    try {
      if (imaging::raster_digest(vistools::dispatch(std::get<vistools::ToolCall>(sub->action), image)) !=
          r.digest) {
        bad.push_back(r.turn);
      }
    } catch (const Error&) {
      bad.push_back(r.turn);
    }
  }
  return bad;
}

}  // namespace tarfas::annotator
