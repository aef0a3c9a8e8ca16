// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>

#include <nlohmann/json.hpp>

#include "tarfas/vistools.hpp"

namespace fixtures {

using namespace tarfas;

Raster constant(int w, int h, std::uint8_t value, int channels) {
  Raster r(w, h, channels);
  for (auto& px : r.data()) px = value;
  return r;
}

Raster random_raster(std::mt19937_64& rng, int w, int h, int channels) {
  Raster r(w, h, channels);
  std::uniform_int_distribution<int> dist(0, 255);
  for (auto& px : r.data()) px = static_cast<std::uint8_t>(dist(rng));
  return r;
}

Raster smooth_raster(std::mt19937_64& rng, int side) {
  return imaging::resize_bilinear(random_raster(rng, 4, 4, 1), side, side);
}

Raster noise_raster(std::mt19937_64& rng, int side) { return random_raster(rng, side, side, 1); }

std::string tool_turn(ToolId tool, const std::string& think) {
  return trajectory::format_turn({think, vistools::ToolCall{tool, nlohmann::json::object()}});
}

std::string zoom_turn(double x0, double y0, double x1, double y1, const std::string& think) {
  return trajectory::format_turn(
      {think, vistools::ToolCall{ToolId::ZoomIn, nlohmann::json{{"bbox", {x0, y0, x1, y1}}}}});
}

std::string answer_turn(Label cls, const std::string& think) {
  return trajectory::format_turn({think, trajectory::FinalAnswer{cls}});
}

std::string fast_reply(Label cls, const std::string& reason) { return trajectory::format_fast({cls, reason}); }

Trajectory make_trajectory(const std::string& id, Label label, const std::optional<std::string>& fast,
                           const std::vector<std::string>& turns, const std::vector<std::size_t>& failed_turns) {
  Trajectory t;
  t.sample_id = id;
  t.label = label;
  if (fast) t.fast = trajectory::FastTurn{*fast, trajectory::parse_fast(*fast)};
  for (std::size_t i = 0; i < turns.size(); ++i) {
    trajectory::Turn turn{turns[i], trajectory::parse_turn(turns[i]), std::nullopt};
    if (const auto* sub = std::get_if<trajectory::SubAnnotation>(&turn.parsed); sub && sub->is_tool_call()) {
      trajectory::ToolResult r;
      r.turn = i;
      r.tool = std::get<vistools::ToolCall>(sub->action).tool;
      r.ok = std::find(failed_turns.begin(), failed_turns.end(), i) == failed_turns.end();
      if (!r.ok) r.error = "tool failed";
      t.tool_results.push_back(r);
    }
    t.turns.push_back(std::move(turn));
  }
  const auto final_cls = t.final_cls();
  t.status = final_cls ? trajectory::Status::Answered : trajectory::Status::Unterminated;
  return t;
}

const expert::ExpertSet& quick_experts() {
  static std::once_flag once;
  static expert::ExpertSet experts;
  std::call_once(once, [] {
    std::mt19937_64 rng(1234);
    std::vector<Raster> smooth, noise;
    for (int i = 0; i < 12; ++i) {
      smooth.push_back(smooth_raster(rng, 32));
      noise.push_back(noise_raster(rng, 32));
    }
    for (auto tool : vistools::kAllTools) {
      if (tool == ToolId::ZoomIn) continue;
      std::vector<expert::LabeledRaster> data;
      const vistools::ToolCall call{tool, nlohmann::json::object()};
      for (const auto& r : smooth) data.push_back({vistools::dispatch(call, r), false});
      for (const auto& r : noise) data.push_back({vistools::dispatch(call, r), true});
      expert::TrainConfig cfg;
      cfg.seed = 7;
      experts[tool] = expert::train_expert(tool, data, cfg).model;
    }
  });
  return experts;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("tarfas-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<annotator::Sample> write_synthetic_manifest(const std::filesystem::path& dir, int count,
                                                        std::uint64_t seed) {
  static const std::vector<std::string> kSpoofTypes = {"photo attack", "phone attack", "mask attack",
                                                       "replay attack"};
  std::filesystem::create_directories(dir / "images");
  std::mt19937_64 rng(seed);
  std::vector<annotator::Sample> samples;
  std::ofstream manifest(dir / "manifest.jsonl");
  for (int i = 0; i < count; ++i) {
    annotator::Sample s;
    s.id = "s" + std::to_string(i);
    s.label = i % 2 == 0 ? Label::Real : Label::Spoof;
    if (s.label == Label::Spoof) s.spoof_type = kSpoofTypes[static_cast<std::size_t>(i / 2) % kSpoofTypes.size()];
    const Raster img = s.label == Label::Real ? smooth_raster(rng, 32) : noise_raster(rng, 32);
    s.image = dir / "images" / (s.id + ".png");
    imaging::encode_png(img, s.image);
    auto row = annotator::sample_to_json(s);
    row["image"] = "images/" + s.id + ".png";
    manifest << row.dump() << '\n';
    samples.push_back(s);
  }
  return samples;
}

void write_script(const std::filesystem::path& path, const std::map<std::string, std::vector<std::string>>& script) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, replies] : script) j[id] = replies;
  std::ofstream(path) << j.dump(2);
}

void write_experts(const std::filesystem::path& dir, const expert::ExpertSet& experts) {
  std::filesystem::create_directories(dir);
  for (const auto& [tool, model] : experts) {
    expert::save_model(model, dir / (std::string(vistools::tool_name(tool)) + ".json"));
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace fixtures
