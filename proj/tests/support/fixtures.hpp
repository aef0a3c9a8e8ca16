// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tarfas/annotator.hpp"
#include "tarfas/expert.hpp"
#include "tarfas/imaging.hpp"
#include "tarfas/trajectory.hpp"

namespace fixtures {

using tarfas::imaging::Raster;
using tarfas::trajectory::Label;
using tarfas::trajectory::Trajectory;
using tarfas::vistools::ToolId;

Raster constant(int w, int h, std::uint8_t value, int channels = 1);
Raster random_raster(std::mt19937_64& rng, int w, int h, int channels = 1);
/// Bilinear upsampling of a 4x4 random grid: low-frequency content only.
Raster smooth_raster(std::mt19937_64& rng, int side);
/// Independent uniform pixels: broadband content.
Raster noise_raster(std::mt19937_64& rng, int side);

/// Canonical raw turn texts.
std::string tool_turn(ToolId tool, const std::string& think = "checking the texture");
std::string zoom_turn(double x0, double y0, double x1, double y1, const std::string& think = "look closer");
std::string answer_turn(Label cls, const std::string& think = "evidence is consistent");
std::string fast_reply(Label cls, const std::string& reason = "overall impression");

/// Builds a trajectory from raw texts. Every parsed tool call gets an ok result
/// unless its turn index is listed in `failed_turns`.
Trajectory make_trajectory(const std::string& id, Label label, const std::optional<std::string>& fast,
                           const std::vector<std::string>& turns, const std::vector<std::size_t>& failed_turns = {});

/// Small trained experts for every non-ZoomIn tool, cached per process.
const tarfas::expert::ExpertSet& quick_experts();

class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Writes `count` synthetic 32x32 samples (PNG) and a manifest; half Real, half Spoof
/// with rotating spoof types. Returns the samples as written.
std::vector<tarfas::annotator::Sample> write_synthetic_manifest(const std::filesystem::path& dir, int count,
                                                                std::uint64_t seed);

/// Writes {"<sample id>": [...replies]} as a mock script file.
void write_script(const std::filesystem::path& path, const std::map<std::string, std::vector<std::string>>& script);

/// Writes every model in `experts` as <ToolName>.json under `dir`.
void write_experts(const std::filesystem::path& dir, const tarfas::expert::ExpertSet& experts);

std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace fixtures
