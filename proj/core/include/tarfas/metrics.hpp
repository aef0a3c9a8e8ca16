// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tarfas/trajectory.hpp"

namespace tarfas::metrics {

using trajectory::Label;

/// Higher scores mean "more Real".
struct ScoredSample {
  std::string id;
  double score = 0.0;
  Label label = Label::Real;
};

struct ErrorRates {
  double far = 0.0;
  double frr = 0.0;
};

/// Decision is Real iff score >= threshold. Throws MissingClass, NonFinite.
ErrorRates far_frr(std::span<const ScoredSample> samples, double threshold);
double hter(std::span<const ScoredSample> samples, double threshold);

/// Mann-Whitney: P(real > spoof) + P(tie) / 2 over all real/spoof pairs.
double auc(std::span<const ScoredSample> samples);

struct EerPoint {
  /// May be -inf or +inf.
  double threshold = 0.0;
  double eer = 0.0;
  double far = 0.0;
  double frr = 0.0;
};

/// Scans midpoints between adjacent distinct scores plus +-inf and minimizes
/// |FAR - FRR|, then HTER, then the threshold. `eer` is the HTER at that point.
EerPoint eer_threshold(std::span<const ScoredSample> samples);

/// Candidate thresholds used by eer_threshold, ascending.
std::vector<double> candidate_thresholds(std::span<const ScoredSample> samples);

/// Reads {"id", "score", "label"} JSONL. Throws Io, or Decode naming the bad line.
std::vector<ScoredSample> read_scores(const std::filesystem::path& path);

}  // namespace tarfas::metrics
