// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>

#include "tarfas/annotator.hpp"
#include "tarfas/error.hpp"
#include "tarfas/reward.hpp"

namespace tarfas::annotator {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

struct Span {
  std::size_t begin;
  std::size_t end;
};

std::vector<Span> find_all(const std::string& haystack, const std::string& needle) {
  std::vector<Span> spans;
  if (needle.empty()) return spans;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) {
    spans.push_back({pos, pos + needle.size()});
  }
  return spans;
}

std::vector<Span> find_regex(const std::string& text, const std::regex& re) {
  std::vector<Span> spans;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
    const auto begin = static_cast<std::size_t>(it->position());
    spans.push_back({begin, begin + static_cast<std::size_t>(it->length())});
  }
  return spans;
}

std::size_t gap_between(Span a, Span b) {
  if (a.end <= b.begin) return b.begin - a.end;
  if (b.end <= a.begin) return a.begin - b.end;
  return 0;
}

const std::regex& percent_figure() {
  static const std::regex re(R"(\d+(?:\.\d+)?\s*(?:%|percent))");
  return re;
}

const std::regex& guidance_phrase() {
  static const std::regex re(R"(predicts\s+\d+(?:\.\d+)?\s*%\s*there(?:\s*(?:'|’)\s*s|\s+is)\s+(?:a\s+)?spoof\s+traces?)");
  return re;
}

}  // namespace

SynonymTable load_synonyms(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open synonym table '" + path.string() + "'");
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(Errc::Decode, "synonym table must be a JSON object of string arrays");
  }
  SynonymTable table;
  for (const auto& [type, phrases] : j.items()) {
    if (!phrases.is_array()) throw Error(Errc::Decode, "synonyms for '" + type + "' must be an array");
    auto& out = table[lower(type)];
    for (const auto& p : phrases) {
      if (!p.is_string() || p.get_ref<const std::string&>().empty()) {
        throw Error(Errc::Decode, "synonyms for '" + type + "' must be non-empty strings");
      }
      out.push_back(lower(p.get<std::string>()));
    }
  }
  return table;
}

std::string_view to_string(Disposition d) noexcept {
  switch (d) {
    case Disposition::Accepted: return "Accepted";
    case Disposition::NeedsReannotation: return "NeedsReannotation";
    case Disposition::BadCase: return "BadCase";
    case Disposition::NeedsManualReview: return "NeedsManualReview";
  }
  return "NeedsReannotation";
}

std::optional<Disposition> parse_disposition(std::string_view text) noexcept {
  for (auto d : {Disposition::Accepted, Disposition::NeedsReannotation, Disposition::BadCase,
                 Disposition::NeedsManualReview}) {
    if (to_string(d) == text) return d;
  }
  return std::nullopt;
}

std::vector<LeakMatch> scan_leakage(std::string_view text, const Sample& s, const VerifyRules& rules, int turn) {
  const std::string hay = lower(text);
  std::vector<LeakMatch> leaks;
  auto record = [&](std::string rule, Span span) {
    leaks.push_back({turn, std::move(rule), std::string(text.substr(span.begin, span.end - span.begin))});
  };

  if (s.spoof_type) {
    std::vector<std::string> phrases{lower(*s.spoof_type)};
    if (const auto it = rules.synonyms.find(phrases.front()); it != rules.synonyms.end()) {
      phrases.insert(phrases.end(), it->second.begin(), it->second.end());
    }
    for (const auto& phrase : phrases) {
      for (const Span span : find_all(hay, phrase)) record("hint", span);
    }
  }

  const auto experts = find_all(hay, "expert");
  const auto percents = find_regex(hay, percent_figure());
  for (const Span e : experts) {
    for (const Span p : percents) {
      if (gap_between(e, p) <= rules.expert_percent_window) {
        record("expert_confidence", {std::min(e.begin, p.begin), std::max(e.end, p.end)});
      }
    }
  }
  for (const Span span : find_regex(hay, guidance_phrase())) record("guidance_phrase", span);
  return leaks;
}

VerificationReport verify(const Trajectory& t, const Sample& s, const VerifyRules& rules) {
  VerificationReport r;
  r.correct = t.final_cls() == s.label;

  if (t.sample_id != s.id) r.format_violations.push_back("trajectory sample id does not match the manifest");
  if (t.status != trajectory::Status::Answered) {
    r.format_violations.push_back("trajectory status is " + std::string(trajectory::to_string(t.status)));
  }
  if (t.turns.size() > rules.l_max) r.format_violations.push_back("trajectory exceeds the turn limit");
  const auto flags = reward::valid_flags(t);
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    const auto& parsed = t.turns[i].parsed;
    if (const auto* v = std::get_if<trajectory::FormatViolation>(&parsed)) {
      r.format_violations.push_back("turn " + std::to_string(i) + ": " + std::string(trajectory::to_string(v->kind)) +
                                    " (" + v->detail + ")");
      continue;
    }
    const auto& sub = std::get<trajectory::SubAnnotation>(parsed);
    if (sub.is_tool_call() && !flags[i]) {
      r.format_violations.push_back("turn " + std::to_string(i) + ": tool call failed to execute");
    }
    if (!sub.is_tool_call() && i + 1 != t.turns.size()) {
      r.format_violations.push_back("turn " + std::to_string(i) + ": answer before the last turn");
    }
  }
  if (!reward::reasoning_format_ok(t) && r.format_violations.empty()) {
    r.format_violations.push_back("reasoning turns do not end in a final answer");
  }

  if (t.fast) {
    if (const auto* fast = std::get_if<trajectory::FastAnswer>(&t.fast->parsed)) {
      auto found = scan_leakage(fast->reason, s, rules, -1);
      r.leaks.insert(r.leaks.end(), found.begin(), found.end());
    }
  }
  for (std::size_t i = 0; i < t.turns.size(); ++i) {
    const auto* sub = std::get_if<trajectory::SubAnnotation>(&t.turns[i].parsed);
    const std::string_view text = sub != nullptr ? std::string_view(sub->think) : std::string_view(t.turns[i].raw);
    auto found = scan_leakage(text, s, rules, static_cast<int>(i));
    r.leaks.insert(r.leaks.end(), found.begin(), found.end());
  }
  r.leakage_ok = r.leaks.empty();
  r.format_ok = r.format_violations.empty() && r.leakage_ok;

  if (r.automated_pass()) {
    r.disposition = rules.manual_gate ? Disposition::NeedsManualReview : Disposition::Accepted;
  } else {
    r.disposition = Disposition::NeedsReannotation;
  }
  return r;
}

ordered_json report_to_json(const VerificationReport& r, std::string_view sample_id) {
  ordered_json j;
  j["sample_id"] = sample_id;
  j["correct"] = r.correct;
  j["format_ok"] = r.format_ok;
  j["format_violations"] = r.format_violations;
  j["leakage_ok"] = r.leakage_ok;
  auto leaks = ordered_json::array();
  for (const auto& leak : r.leaks) {
    leaks.push_back(ordered_json{{"turn", leak.turn}, {"rule", leak.rule}, {"span", leak.span}});
  }
  j["leaks"] = std::move(leaks);
  j["disposition"] = to_string(r.disposition);
  return j;
}

}  // namespace tarfas::annotator
