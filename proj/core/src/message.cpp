// SPDX-License-Identifier: Apache-2.0
#include "tarfas/message.hpp"

#include <algorithm>
#include <openssl/evp.h>

#include "tarfas/error.hpp"

namespace tarfas::chat {

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

Message Message::system(std::string text) {
  return Message{Role::System, {TextPart{std::move(text)}}};
}

Message Message::user(std::vector<Part> parts) { return Message{Role::User, std::move(parts)}; }

Message Message::assistant(std::string text) {
  return Message{Role::Assistant, {TextPart{std::move(text)}}};
}

std::string Message::text() const {
  std::string out;
  for (const auto& part : parts) {
    if (const auto* t = std::get_if<TextPart>(&part)) out += t->text;
  }
  return out;
}

void validate_message(const Message& msg) {
  if (msg.parts.empty()) throw Error(Errc::InvalidArgument, "message has no parts");
  for (const auto& part : msg.parts) {
    if (const auto* img = std::get_if<ImagePart>(&part)) {
      if (msg.role != Role::User) {
        throw Error(Errc::InvalidArgument, "image parts are only allowed in user messages");
      }
      if (!img->image) throw Error(Errc::InvalidArgument, "image part without pixels");
    }
  }
}

void validate_history(const std::vector<Message>& history) {
  if (history.empty() || history.front().role != Role::System) {
    throw Error(Errc::InvalidArgument, "history must start with a system message");
  }
  for (std::size_t i = 1; i < history.size(); ++i) {
    const Role expected = (i % 2 == 1) ? Role::User : Role::Assistant;
    if (history[i].role != expected) {
      throw Error(Errc::InvalidArgument, "history must alternate user/assistant after the system message");
    }
  }
  if (history.back().role != Role::User) {
    throw Error(Errc::InvalidArgument, "history must end with a user message");
  }
  for (const auto& msg : history) validate_message(msg);
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(Errc::Decode, "base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error(Errc::Decode, "malformed base64");
  std::size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

std::string png_data_uri(const imaging::Raster& img) {
  return "data:image/png;base64," + base64_encode(imaging::encode_png(img));
}

nlohmann::json to_wire(const Message& msg) {
  nlohmann::json out{{"role", to_string(msg.role)}};
  const bool text_only = std::all_of(msg.parts.begin(), msg.parts.end(), [](const Part& p) {
    return std::holds_alternative<TextPart>(p);
  });
  if (text_only && msg.role != Role::User) {
    out["content"] = msg.text();
    return out;
  }
  auto content = nlohmann::json::array();
  for (const auto& part : msg.parts) {
    if (const auto* t = std::get_if<TextPart>(&part)) {
      content.push_back({{"type", "text"}, {"text", t->text}});
    } else {
      const auto& img = std::get<ImagePart>(part);
      content.push_back(
          {{"type", "image_url"}, {"image_url", {{"url", png_data_uri(*img.image)}}}});
    }
  }
  out["content"] = std::move(content);
  return out;
}

}  // namespace tarfas::chat
