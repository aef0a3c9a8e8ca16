// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tarfas/message.hpp"

namespace tarfas::prompts {

enum class Stage { FirstQuery, ToolResult, FormatDecl, ToolGuidance };

/// Annotation sessions carry the ground-truth hint in the first prompt;
/// rollouts and inference never do.
enum class Mode { Annotation, Rollout };

struct PromptContext {
  Mode mode = Mode::Rollout;
  std::shared_ptr<const imaging::Raster> image;
  std::string image_source;
  std::optional<std::string> hint;
  std::optional<std::string> guidance;
};

inline constexpr std::string_view kRolloutQuery = "Is this photo of a real person? (Do not use any tools)";
inline constexpr std::string_view kAnnotationQuery = "This is the image you need to investigate.";
inline constexpr std::string_view kToolGuidance =
    "Wait, you should re-examine the image and give the final answer (use tools if needed).";
inline constexpr std::string_view kFormatDeclaration =
    "Think first, call tools if needed, then answer. Format strictly as: <think> ... </think> "
    "<tool_call> ... </tool_call> (if tools needed) <answer>(<Spoof>/<Real>)</answer>";

/// Ordered message parts for one prompt stage. Throws MissingContext when the
/// stage needs an image (FirstQuery, ToolResult) or, in annotation mode, a hint.
std::vector<chat::Part> build_prompts(Stage stage, const PromptContext& ctx);

/// "Hint: <text>" as appended to the first annotation prompt.
std::string hint_text(std::string_view hint);

/// Full annotator system prompt (role, principles, workflow, tools, conclusion).
std::string annotation_system_prompt();

/// Rollout system prompt: role and mission plus Hermes-style tool schemas.
std::string rollout_system_prompt();

/// JSON-schema function descriptions for all six tools.
nlohmann::json tool_schemas();

}  // namespace tarfas::prompts
