// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tarfas/imaging.hpp"

namespace tarfas::chat {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role) noexcept;

struct TextPart {
  std::string text;
};

/// Image attachment. `source` is a human-readable reference (file path or render id)
/// and never goes on the wire; the pixels are sent as a base64 PNG data URI.
struct ImagePart {
  std::shared_ptr<const imaging::Raster> image;
  std::string source;
};

using Part = std::variant<TextPart, ImagePart>;

struct Message {
  Role role = Role::User;
  std::vector<Part> parts;

  static Message system(std::string text);
  static Message user(std::vector<Part> parts);
  static Message assistant(std::string text);

  /// Concatenation of all text parts.
  std::string text() const;
};

/// Throws InvalidArgument unless the message has at least one part and images
/// only appear in user messages.
void validate_message(const Message& msg);

/// One system message, then user/assistant alternating starting with user.
void validate_history(const std::vector<Message>& history);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws Decode on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// "data:image/png;base64,..." for the raster.
std::string png_data_uri(const imaging::Raster& img);

/// Chat-completions style content for one message (string for text-only
/// system/assistant messages, content-part array otherwise).
nlohmann::json to_wire(const Message& msg);

}  // namespace tarfas::chat
