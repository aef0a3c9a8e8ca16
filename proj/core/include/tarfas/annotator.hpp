// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tarfas/expert.hpp"
#include "tarfas/mllm_client.hpp"
#include "tarfas/trajectory.hpp"

namespace tarfas::annotator {

using trajectory::Label;
using trajectory::Trajectory;

/// One manifest row: {"id", "image", "label", "spoof_type"}.
struct Sample {
  std::string id;
  std::filesystem::path image;
  Label label = Label::Real;
  std::optional<std::string> spoof_type;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Throws Decode on missing fields, an unknown label, or a Real sample with a spoof_type.
Sample sample_from_json(const nlohmann::json& j);
nlohmann::ordered_json sample_to_json(const Sample& s);

/// Reads a JSONL manifest. Blank lines are skipped; relative image paths resolve
/// against the manifest's directory. Throws Io, or Decode naming the bad line.
std::vector<Sample> read_manifest(const std::filesystem::path& path);

/// Ground-truth description given to the annotator: the spoof type for attacks,
/// "spoof attack" when the type is unknown, "real person" for live samples.
std::string hint_for(const Sample& s);

struct AnnotateConfig {
  std::size_t l_max = 6;
  /// Ask once more with the format declaration when a reply does not parse.
  bool resend_on_format_error = true;
  /// When set, tool renders are written below this directory and recorded
  /// relative to it.
  std::optional<std::filesystem::path> render_dir;
};

/// Runs the multi-turn annotation loop for one sample. Client errors propagate;
/// tool failures are recorded in the trajectory and the loop continues.
/// Throws InvalidArgument when an expert for a non-ZoomIn tool is missing.
Trajectory annotate_sample(const Sample& s, const imaging::Raster& image, chat::ChatClient& client,
                           const expert::ExpertSet& experts, const AnnotateConfig& cfg,
                           const chat::ChatOptions& opts);
Trajectory annotate_sample(const Sample& s, chat::ChatClient& client, const expert::ExpertSet& experts,
                           const AnnotateConfig& cfg, const chat::ChatOptions& opts);

/// Sent in place of a tool render when the tool fails.
std::string tool_error_notice(std::string_view tool, std::string_view message);

/// Ids of turns whose recorded render digest differs from a fresh dispatch on `image`.
std::vector<std::size_t> provenance_mismatches(const Trajectory& t, const imaging::Raster& image);

// ---- verification ----

/// Lower-cased spoof type -> phrases that reveal it.
using SynonymTable = std::map<std::string, std::vector<std::string>>;

/// Reads {"photo attack": ["printed photo", ...], ...}. Throws Io / Decode.
SynonymTable load_synonyms(const std::filesystem::path& path);

struct VerifyRules {
  SynonymTable synonyms;
  bool manual_gate = false;
  std::size_t l_max = 6;
  /// Characters allowed between "expert" and a percent figure.
  std::size_t expert_percent_window = 40;
};

enum class Disposition { Accepted, NeedsReannotation, BadCase, NeedsManualReview };

std::string_view to_string(Disposition d) noexcept;
std::optional<Disposition> parse_disposition(std::string_view text) noexcept;

struct LeakMatch {
  /// Reasoning turn index, or -1 for the fast-answer reason.
  int turn = 0;
  std::string rule;
  std::string span;

  friend bool operator==(const LeakMatch&, const LeakMatch&) = default;
};

struct VerificationReport {
  bool correct = false;
  bool format_ok = false;
  std::vector<std::string> format_violations;
  bool leakage_ok = false;
  std::vector<LeakMatch> leaks;
  Disposition disposition = Disposition::NeedsReannotation;

  bool automated_pass() const noexcept { return correct && format_ok && leakage_ok; }
};

/// Case-insensitive leak scan of one text: the spoof type and its synonyms,
/// "expert" near a percent figure, and the guidance phrase itself.
std::vector<LeakMatch> scan_leakage(std::string_view text, const Sample& s, const VerifyRules& rules,
                                    int turn = 0);

/// Correctness, format (including the leak scan) and disposition. A failing
/// trajectory is NeedsReannotation; the pipeline decides when that becomes BadCase.
VerificationReport verify(const Trajectory& t, const Sample& s, const VerifyRules& rules);

nlohmann::ordered_json report_to_json(const VerificationReport& r, std::string_view sample_id);

// ---- pipeline ----

struct PipelineConfig {
  AnnotateConfig annotate;
  VerifyRules rules;
  int workers = 4;
  std::uint64_t seed = 0;
  bool save_renders = true;
};

struct PipelineStats {
  std::size_t samples = 0;
  std::size_t accepted = 0;
  std::size_t review = 0;
  std::size_t badcase = 0;
  std::size_t reannotated = 0;
  std::size_t resumed = 0;
  std::array<std::size_t, vistools::kToolCount> tool_histogram{};
  double mean_turns = 0.0;
};

nlohmann::ordered_json stats_to_json(const PipelineStats& s);

/// Seed for one annotation attempt; differs across samples and attempts.
std::uint64_t attempt_seed(std::uint64_t base, std::string_view sample_id, int attempt) noexcept;

/// Annotates every sample, re-annotating failures once. Writes accepted.jsonl,
/// review.jsonl, badcase.jsonl, journal.jsonl and stats.json into `out_dir`.
/// Samples with a final disposition in an existing journal are skipped.
/// Auth errors abort the run after flushing finished work; other client errors
/// count as a failed attempt.
PipelineStats run_pipeline(const std::vector<Sample>& samples, chat::ChatClient& client,
                           const expert::ExpertSet& experts, const PipelineConfig& cfg,
                           const std::filesystem::path& out_dir);

}  // namespace tarfas::annotator
