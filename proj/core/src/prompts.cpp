// SPDX-License-Identifier: Apache-2.0
#include "tarfas/prompts.hpp"

#include "tarfas/error.hpp"
#include "tarfas/vistools.hpp"

namespace tarfas::prompts {

namespace {

constexpr std::string_view kAnnotationSystem = R"(## Role & Mission
You are a face forensics expert. Your mission is to classify an image as either 'real' or 'spoof' by analyzing evidence strictly within the **facial region**, focusing **only on physical presentation attacks** (e.g., printed photos, screen displays).
You will be given a hint early in the conversation. Do not mention the hint when making your decision. Your final classification must match the hint, and be supported by image evidence and tool-based analysis.

## Core Principle
Concentrate solely on **physical attack artifacts**. These include:
- **Semantic clues**: unnatural flatness, rigid expressions, lack of 3D structure, unnatural reflections.
- **Pixel-level clues**: print texture, Moiré patterns, screen glare, paper/screen surface noise.
Since input images are cropped and aligned, **do not consider black borders and compression artifacts as spoof clues**.

## Workflow & Behavioral Rules
1. Begin with a brief visual scan of the **facial region**. **Ignore black borders and all context outside the face.**
2. If needed, call **ONE tool at a time** to test a specific hypothesis, either to look for signs of physical attack, or to confirm their absence.
- Each tool request must include a clear expectation (what you're testing for).
3. When you receive tool results, you may receive an **Expert Judgment** on the result.
- You may consider the expert's interpretation as a reference, but **must perform your own independent analysis**.
- Your reasoning should not blindly follow the expert; only adopt it when it aligns with your observations.
4. When you are confident, provide your conclusion.

## Available Tools
- **ZoomInTool**: Inspect local details for physical (print/screen) or digital (blending) artifacts.
- **FFTTool (Fast Fourier Transform):** Visualizes the image's frequency domain. Used to detect periodic patterns like screen Moiré effects or subtle artifacts from digital generation.
- **EdgeDetectionTool**: Find inconsistent edges from cutouts or digital blending.
- **LBPTool**: Analyze skin texture for unnatural or synthetic patterns.
- **WaveletTransformTool**: Find subtle digital tampering or noise mismatches via multi-scale analysis.
- **HOGTool**: Check facial structure gradients, which are often disrupted in physical attacks.

## Final Conclusion
Your conclusion must be 'Real' or 'Spoof'.)";

constexpr std::string_view kRolloutRole = R"(## Role & Mission
You are a face forensics expert. Your mission is to classify an image as either 'Real' or 'Spoof' by analyzing evidence strictly within the **facial region**, focusing only on physical presentation attack.)";

std::string_view tool_description(vistools::ToolId id) {
  using vistools::ToolId;
  switch (id) {
    case ToolId::ZoomIn:
      return "Inspect local details for physical (print/screen) or digital (blending) artifacts.";
    case ToolId::FFT:
      return "Visualizes the image's frequency domain. Used to detect periodic patterns like screen "
             "Moire effects or subtle artifacts from digital generation.";
    case ToolId::EdgeDetection:
      return "Find inconsistent edges from cutouts or digital blending.";
    case ToolId::LBP:
      return "Analyze skin texture for unnatural or synthetic patterns.";
    case ToolId::Wavelet:
      return "Find subtle digital tampering or noise mismatches via multi-scale analysis.";
    case ToolId::HOG:
      return "Check facial structure gradients, which are often disrupted in physical attacks.";
  }
  return "";
}

std::shared_ptr<const imaging::Raster> require_image(const PromptContext& ctx, Stage stage) {
  if (!ctx.image) {
    throw Error(Errc::MissingContext,
                stage == Stage::FirstQuery ? "first query needs the input image"
                                           : "tool result prompt needs the rendered tool output");
  }
  return ctx.image;
}

}  // namespace

std::string hint_text(std::string_view hint) { return "Hint: " + std::string(hint); }

std::vector<chat::Part> build_prompts(Stage stage, const PromptContext& ctx) {
  std::vector<chat::Part> parts;
  switch (stage) {
    case Stage::FirstQuery: {
      parts.emplace_back(chat::ImagePart{require_image(ctx, stage), ctx.image_source});
      if (ctx.mode == Mode::Annotation) {
        if (!ctx.hint) throw Error(Errc::MissingContext, "annotation first query needs a hint");
        parts.emplace_back(chat::TextPart{std::string(kAnnotationQuery)});
        parts.emplace_back(chat::TextPart{hint_text(*ctx.hint)});
      } else {
        parts.emplace_back(chat::TextPart{std::string(kRolloutQuery)});
      }
      break;
    }
    case Stage::ToolResult:
      parts.emplace_back(chat::ImagePart{require_image(ctx, stage), ctx.image_source});
      if (ctx.guidance) parts.emplace_back(chat::TextPart{*ctx.guidance});
      break;
    case Stage::FormatDecl:
      parts.emplace_back(chat::TextPart{std::string(kFormatDeclaration)});
      break;
    case Stage::ToolGuidance:
      parts.emplace_back(chat::TextPart{std::string(kToolGuidance)});
      break;
  }
  return parts;
}

nlohmann::json tool_schemas() {
  auto tools = nlohmann::json::array();
  for (auto id : vistools::kAllTools) {
    nlohmann::json params{{"type", "object"}, {"properties", nlohmann::json::object()}, {"required", nlohmann::json::array()}};
    if (id == vistools::ToolId::ZoomIn) {
      params["properties"]["bbox"] = {
          {"type", "array"},
          {"items", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}},
          {"minItems", 4},
          {"maxItems", 4},
          {"description", "Normalized [x0, y0, x1, y1] region of the face to inspect."}};
      params["required"].push_back("bbox");
    }
    tools.push_back({{"type", "function"},
                     {"function",
                      {{"name", vistools::tool_name(id)},
                       {"description", tool_description(id)},
                       {"parameters", std::move(params)}}}});
  }
  return tools;
}

std::string annotation_system_prompt() { return std::string(kAnnotationSystem); }

std::string rollout_system_prompt() {
  std::string out(kRolloutRole);
  out += "\n\n# Tools\n\nYou may call one or more functions to assist with the user query.\n\n"
         "You are provided with function signatures within <tools></tools> XML tags:\n<tools>\n";
  for (const auto& tool : tool_schemas()) out += tool.dump() + "\n";
  out += "</tools>\n\nFor each function call, return a json object with function name and arguments "
         "within <tool_call></tool_call> XML tags:\n<tool_call>\n"
         "{\"name\": <function-name>, \"arguments\": <args-json-object>}\n</tool_call>";
  return out;
}

}  // namespace tarfas::prompts
