// SPDX-License-Identifier: Apache-2.0
#include "tarfas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "tarfas/error.hpp"

namespace tarfas::metrics {

namespace {

struct ClassCounts {
  std::size_t real = 0;
  std::size_t spoof = 0;
};

ClassCounts check(std::span<const ScoredSample> samples) {
  ClassCounts c;
  for (const auto& s : samples) {
    if (!std::isfinite(s.score)) throw Error(Errc::NonFinite, "score of '" + s.id + "' is not finite");
    (s.label == Label::Real ? c.real : c.spoof)++;
  }
  if (c.real == 0 || c.spoof == 0) {
    throw Error(Errc::MissingClass, "metrics need at least one Real and one Spoof sample");
  }
  return c;
}

ErrorRates rates_unchecked(std::span<const ScoredSample> samples, double threshold, ClassCounts c) {
  std::size_t accepted_spoof = 0;
  std::size_t rejected_real = 0;
  for (const auto& s : samples) {
    const bool accept = s.score >= threshold;
    if (s.label == Label::Spoof && accept) ++accepted_spoof;
    if (s.label == Label::Real && !accept) ++rejected_real;
  }
  return {static_cast<double>(accepted_spoof) / static_cast<double>(c.spoof),
          static_cast<double>(rejected_real) / static_cast<double>(c.real)};
}

}  // namespace

ErrorRates far_frr(std::span<const ScoredSample> samples, double threshold) {
  if (std::isnan(threshold)) throw Error(Errc::NonFinite, "threshold is NaN");
  return rates_unchecked(samples, threshold, check(samples));
}

double hter(std::span<const ScoredSample> samples, double threshold) {
  const ErrorRates r = far_frr(samples, threshold);
  return (r.far + r.frr) / 2.0;
}

double auc(std::span<const ScoredSample> samples) {
  const ClassCounts c = check(samples);
  // Sort once and count, per spoof score, the reals strictly above and tied.
  std::vector<std::pair<double, bool>> sorted;
  sorted.reserve(samples.size());
  for (const auto& s : samples) sorted.emplace_back(s.score, s.label == Label::Real);
  std::sort(sorted.begin(), sorted.end());
  double wins = 0.0;
  std::size_t reals_below = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    std::size_t reals = 0;
    std::size_t spoofs = 0;
    while (j < sorted.size() && sorted[j].first == sorted[i].first) {
      (sorted[j].second ? reals : spoofs)++;
      ++j;
    }
    const std::size_t reals_above = c.real - reals_below - reals;
    wins += static_cast<double>(spoofs) * (static_cast<double>(reals_above) + 0.5 * static_cast<double>(reals));
    reals_below += reals;
    i = j;
  }
  return wins / (static_cast<double>(c.real) * static_cast<double>(c.spoof));
}

std::vector<double> candidate_thresholds(std::span<const ScoredSample> samples) {
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (const auto& s : samples) scores.push_back(s.score);
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  std::vector<double> out;
  out.reserve(scores.size() + 1);
  out.push_back(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i + 1 < scores.size(); ++i) out.push_back(scores[i] + (scores[i + 1] - scores[i]) / 2.0);
  out.push_back(std::numeric_limits<double>::infinity());
  return out;
}

EerPoint eer_threshold(std::span<const ScoredSample> samples) {
  const ClassCounts c = check(samples);
  EerPoint best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (const double t : candidate_thresholds(samples)) {
    const ErrorRates r = rates_unchecked(samples, t, c);
    const double gap = std::abs(r.far - r.frr);
    const double h = (r.far + r.frr) / 2.0;
    // Candidates ascend, so strict comparisons keep the smaller threshold on ties.
    if (gap < best_gap || (gap == best_gap && h < best.eer)) {
      best_gap = gap;
      best = {t, h, r.far, r.frr};
    }
  }
  return best;
}

std::vector<ScoredSample> read_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open scores file '" + path.string() + "'");
  std::vector<ScoredSample> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(Errc::Decode, where + "expected a JSON object");
    ScoredSample s;
    if (const auto it = j.find("id"); it != j.end() && it->is_string()) s.id = it->get<std::string>();
    const auto score = j.find("score");
    if (score == j.end() || !score->is_number()) throw Error(Errc::Decode, where + "'score' must be a number");
    s.score = score->get<double>();
    const auto label = j.find("label");
    const auto parsed = label != j.end() && label->is_string()
                            ? trajectory::parse_label(label->get<std::string>())
                            : std::nullopt;
    if (!parsed) throw Error(Errc::Decode, where + "'label' must be Real or Spoof");
    s.label = *parsed;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace tarfas::metrics
