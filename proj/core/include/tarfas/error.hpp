// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tarfas {

enum class Errc {
  Io,
  Decode,
  NonFinite,
  InvalidArgument,
  ImageTooSmall,
  InvalidTool,
  MissingContext,
  GroupTooSmall,
  InsufficientData,
  DegenerateLabels,
  FeatureSpecMismatch,
  InvalidProbability,
  Transport,
  Protocol,
  Auth,
  ScriptExhausted,
  MissingClass,
  Config,
};

std::string_view to_string(Errc code) noexcept;

/// Domain error raised by every tarfas module. Format problems in model
/// output are not errors; see trajectory.hpp.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tarfas
