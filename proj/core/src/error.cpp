// SPDX-License-Identifier: Apache-2.0
#include "tarfas/error.hpp"

namespace tarfas {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::Io: return "IoError";
    case Errc::Decode: return "DecodeError";
    case Errc::NonFinite: return "NonFiniteError";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ImageTooSmall: return "ImageTooSmall";
    case Errc::InvalidTool: return "InvalidTool";
    case Errc::MissingContext: return "MissingContext";
    case Errc::GroupTooSmall: return "GroupTooSmall";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::DegenerateLabels: return "DegenerateLabels";
    case Errc::FeatureSpecMismatch: return "FeatureSpecMismatch";
    case Errc::InvalidProbability: return "InvalidProbability";
    case Errc::Transport: return "TransportError";
    case Errc::Protocol: return "ProtocolError";
    case Errc::Auth: return "AuthError";
    case Errc::ScriptExhausted: return "ScriptExhausted";
    case Errc::MissingClass: return "MissingClass";
    case Errc::Config: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace tarfas
