// SPDX-License-Identifier: Apache-2.0
// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tarfas/annotator.hpp"
#include "tarfas/cli.hpp"
#include "tarfas/error.hpp"
#include "tarfas/expert.hpp"
#include "tarfas/metrics.hpp"
#include "tarfas/reward.hpp"
#include "tarfas/spectral.hpp"
#include "tarfas/vistools.hpp"

using namespace tarfas;
using trajectory::Label;
using vistools::ToolId;
using Clock = std::chrono::steady_clock;

namespace {

/// Collects the first few failure messages of one criterion.
struct Check {
  std::vector<std::string> failures;
  std::size_t assertions = 0;

  void expect(bool ok, const std::function<std::string()>& what) {
    ++assertions;
    if (!ok && failures.size() < 5) failures.push_back(what());
  }
  bool ok() const { return failures.empty(); }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

// ---- 1 ----

std::string step_text(oracle::Step s) {
  switch (s) {
    case oracle::Step::Fft:
    case oracle::Step::FailedFft: return fixtures::tool_turn(ToolId::FFT);
    case oracle::Step::Lbp: return fixtures::tool_turn(ToolId::LBP);
    case oracle::Step::AnswerReal: return fixtures::answer_turn(Label::Real);
    case oracle::Step::AnswerSpoof: return fixtures::answer_turn(Label::Spoof);
    case oracle::Step::UnknownTool: return R"(<think>try a laser</think><tool_call>{"name":"LaserTool","arguments":{}}</tool_call>)";
  }
  return {};
}

std::optional<std::string> fast_text(oracle::Fast f) {
  switch (f) {
    case oracle::Fast::Missing: return std::nullopt;
    case oracle::Fast::Malformed: return std::string("<Maybe><reason>unsure</reason>");
    case oracle::Fast::SaysReal: return fixtures::fast_reply(Label::Real);
    case oracle::Fast::SaysSpoof: return fixtures::fast_reply(Label::Spoof);
  }
  return std::nullopt;
}

std::string criterion_reward_oracle(Check& c) {
  const auto start = Clock::now();
  std::vector<std::vector<oracle::Step>> sequences = {{}};
  for (std::size_t begin = 0, len = 0; len < 4; ++len) {
    const std::size_t end = sequences.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (auto s : oracle::kAllSteps) {
        auto next = sequences[i];
        next.push_back(s);
        sequences.push_back(std::move(next));
      }
    }
    begin = end;
  }
  reward::RewardConfig capped;
  reward::RewardConfig literal;
  literal.clamp_mode = reward::ClampMode::LiteralMax;
  std::size_t scored = 0;
  for (const auto& steps : sequences) {
    std::vector<std::string> texts;
    std::vector<std::size_t> failed;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      texts.push_back(step_text(steps[i]));
      if (steps[i] == oracle::Step::FailedFft) failed.push_back(i);
    }
    for (auto fast : oracle::kAllFast) {
      for (Label label : {Label::Real, Label::Spoof}) {
        const auto t = fixtures::make_trajectory("e", label, fast_text(fast), texts, failed);
        const bool spoof = label == Label::Spoof;
        for (const auto* cfg : {&capped, &literal}) {
          const auto got = reward::total_reward(t, label, *cfg);
          const auto want = oracle::score(fast, steps, spoof, cfg->beta_fast, cfg->beta_rsn, cfg->beta_tool,
                                          cfg->gamma, cfg == &literal);
          ++scored;
          c.expect(got.r_fast == want.r_fast && got.r_rsn == want.r_rsn && got.f_tool == want.f_tool &&
                       got.r_tool == want.r_tool && got.total == want.total,
                   [&] { return "mismatch on a " + std::to_string(steps.size()) + "-turn rollout: " + fmt(got.total) +
                                " vs " + fmt(want.total); });
        }
        c.expect(reward::st_grpo_reward(t, label) == oracle::score_single_tool(steps, spoof),
                 [&] { return std::string("single-tool baseline mismatch"); });
      }
    }
  }
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 5.0, [&] { return "took " + fmt(elapsed) + " s"; });
  return std::to_string(scored) + " rollouts scored in " + fmt(std::round(elapsed * 1000) / 1000) + " s";
}

// ---- 2 ----

std::string criterion_worked_values(Check& c) {
  const auto perfect = fixtures::make_trajectory(
      "p", Label::Spoof, fixtures::fast_reply(Label::Spoof),
      {fixtures::tool_turn(ToolId::FFT), fixtures::tool_turn(ToolId::LBP), fixtures::answer_turn(Label::Spoof)});
  const double a = reward::total_reward(perfect, Label::Spoof, {}).total;
  c.expect(std::abs(a - 0.76) < 1e-12, [&] { return "perfect rollout " + fmt(a); });

  const auto broken = fixtures::make_trajectory("v", Label::Spoof, std::string("??"), {"??"});
  const double b = reward::total_reward(broken, Label::Spoof, {}).total;
  c.expect(std::abs(b + 0.6) < 1e-12, [&] { return "all-violation rollout " + fmt(b); });

  reward::RewardConfig literal;
  literal.clamp_mode = reward::ClampMode::LiteralMax;
  const auto no_tools = fixtures::make_trajectory("n", Label::Real, std::nullopt, {fixtures::answer_turn(Label::Real)});
  const double f = reward::tool_diversity(no_tools, literal);
  c.expect(std::abs(f - 1.2) < 1e-12, [&] { return "literal F_tool " + fmt(f); });
  return "0.76 / -0.6 / 1.2 -> " + fmt(a) + " / " + fmt(b) + " / " + fmt(f);
}

// ---- 3 ----

std::string criterion_advantages(Check& c) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-0.6, 1.08);
  double worst_mean = 0, worst_std = 0;
  for (int g = 0; g < 1000; ++g) {
    std::vector<double> r(8);
    for (auto& v : r) v = u(rng);
    const auto a = reward::group_advantages(r);
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / 8.0;
    double var = 0;
    for (double v : a) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / 8.0);
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_std = std::max(worst_std, std::abs(sd - 1.0));
  }
  c.expect(worst_mean < 1e-12, [&] { return "mean " + fmt(worst_mean); });
  c.expect(worst_std < 1e-12, [&] { return "std error " + fmt(worst_std); });
  std::uniform_int_distribution<int> level(0, 10);
  for (int g = 0; g < 100; ++g) {
    const std::vector<double> r(8, level(rng) / 10.0 - 0.5);
    const auto a = reward::group_advantages(r);
    c.expect(std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; }),
             [] { return std::string("degenerate group gave nonzero advantages"); });
  }
  return "max |mean| " + fmt(worst_mean) + ", max |std-1| " + fmt(worst_std);
}

// ---- 4 ----

std::string criterion_operators(Check& c) {
  const auto start = Clock::now();
  std::mt19937_64 rng(404);
  int images = 0;
  for (; images < 128; ++images) {
    const auto img = fixtures::random_raster(rng, 8, 8);
    c.expect(vistools::lbp_map(img) == oracle::lbp(img), [] { return std::string("LBP mismatch"); });
    const auto lap = oracle::laplacian_abs(img);
    c.expect(vistools::laplacian_response(img).values == lap, [] { return std::string("Laplacian mismatch"); });
    const auto edge = vistools::laplacian_edge(img);
    const auto q = oracle::quantize(lap);
    c.expect(std::equal(q.begin(), q.end(), edge.data().begin()), [] { return std::string("edge render mismatch"); });
    const auto bands = vistools::haar_decompose(img);
    const auto want = oracle::haar(img);
    c.expect(bands.ll.values == want.ll && bands.lh.values == want.lh && bands.hl.values == want.hl &&
                 bands.hh.values == want.hh,
             [] { return std::string("Haar mismatch"); });
  }
  for (int i = 0; i < 4; ++i) {
    const auto img = fixtures::random_raster(rng, 8, 8);
    spectral::ComplexField f(8, 8);
    std::vector<std::complex<double>> in;
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) f.at(x, y) = img.at(x, y);
    }
    const auto direct = oracle::dft2(f.values, 8, 8);
    spectral::fft_2d(f, false);
    double err = 0;
    for (std::size_t k = 0; k < direct.size(); ++k) err = std::max(err, std::abs(direct[k] - f.values[k]));
    c.expect(err < 1e-8, [&] { return "FFT differs from direct DFT by " + fmt(err); });
  }
  double worst_parseval = 0, worst_roundtrip = 0;
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 20; ++i) {
    spectral::ComplexField f(32, 32);
    for (auto& v : f.values) v = {u(rng) * 255, i % 2 ? u(rng) * 255 : 0.0};
    const auto original = f.values;
    double energy = 0;
    for (const auto& v : original) energy += std::norm(v);
    spectral::fft_2d(f, false);
    double spectrum = 0;
    for (const auto& v : f.values) spectrum += std::norm(v);
    spectrum /= 32.0 * 32.0;
    worst_parseval = std::max(worst_parseval, std::abs(spectrum - energy) / energy);
    spectral::fft_2d(f, true);
    for (std::size_t k = 0; k < original.size(); ++k) {
      worst_roundtrip = std::max(worst_roundtrip, std::abs(f.values[k] - original[k]));
    }
  }
  c.expect(worst_parseval < 1e-6, [&] { return "Parseval error " + fmt(worst_parseval); });
  c.expect(worst_roundtrip < 1e-9, [&] { return "round-trip error " + fmt(worst_roundtrip); });
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 10.0, [&] { return "took " + fmt(elapsed) + " s"; });
  return std::to_string(images) + " images exact; Parseval " + fmt(worst_parseval) + ", round trip " +
         fmt(worst_roundtrip);
}

// ---- 5 ----

std::string random_think(std::mt19937_64& rng) {
  static const std::vector<std::string> words = {"grain", "moiré", "edge", "\"quoted\"", "a\\b", "tab\there",
                                                 "line\nbreak", "ünïcode", "<", "x > y", "{json}", "&amp;"};
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1), count(1, 6);
  std::string out = "inspect";
  for (std::size_t i = count(rng); i > 0; --i) out += " " + words[pick(rng)];
  return out;
}

trajectory::Trajectory random_trajectory(std::mt19937_64& rng, int index) {
  std::uniform_int_distribution<int> coin(0, 1), turns(0, 5), tool(0, 5);
  std::uniform_real_distribution<double> unit(0, 1);
  const Label label = coin(rng) ? Label::Spoof : Label::Real;
  std::optional<std::string> fast;
  switch (turns(rng) % 3) {
    case 0: fast = fixtures::fast_reply(coin(rng) ? Label::Spoof : Label::Real, random_think(rng)); break;
    case 1: fast = "<Real>" + random_think(rng); break;
    default: break;
  }
  std::vector<std::string> texts;
  std::vector<std::size_t> failed;
  const int n = turns(rng);
  for (int i = 0; i < n; ++i) {
    const auto id = vistools::kAllTools[static_cast<std::size_t>(tool(rng))];
    if (id == ToolId::ZoomIn) {
      const double x0 = unit(rng) * 0.5, y0 = unit(rng) * 0.5;
      texts.push_back(fixtures::zoom_turn(x0, y0, x0 + 0.1 + unit(rng) * 0.4, y0 + 0.1 + unit(rng) * 0.4,
                                          random_think(rng)));
    } else {
      texts.push_back(fixtures::tool_turn(id, random_think(rng)));
    }
    if (unit(rng) < 0.1) failed.push_back(static_cast<std::size_t>(i));
  }
  if (coin(rng)) texts.push_back(fixtures::answer_turn(coin(rng) ? Label::Spoof : Label::Real, random_think(rng)));
  auto t = fixtures::make_trajectory("gen-" + std::to_string(index), label, fast, texts, failed);
  if (coin(rng)) t.hint = "hint " + random_think(rng);
  if (!t.turns.empty() && coin(rng)) t.turns.front().rejected_raw = "first try: " + random_think(rng);
  for (auto& r : t.tool_results) {
    r.digest = imaging::raster_digest(imaging::Raster(1, 1, 1, {static_cast<std::uint8_t>(r.turn)}));
    r.render = t.sample_id + "/a1_t" + std::to_string(r.turn) + ".png";
    if (r.tool != ToolId::ZoomIn && r.ok) r.expert_p = unit(rng);
  }
  if (coin(rng)) t.final_logit = unit(rng) * 10 - 5;
  return t;
}

std::string criterion_parsers(Check& c) {
  std::mt19937_64 rng(555);
  static const std::vector<std::string> pieces = {
      "<think>", "</think>", "<tool_call>", "</tool_call>", "<answer>", "</answer>", "<Real>", "<Spoof>",
      "<reason>", "</reason>", R"({"name":"FFTTool","arguments":{}})", R"({"name":)", "{", "}", "\"", " ", "\n",
      "ZoomInTool", R"({"bbox":[0,0,1,1]})", "\xff\xfe", std::string(1, '\0')};
  const std::vector<std::string> valid = {fixtures::tool_turn(ToolId::FFT),
                                         fixtures::zoom_turn(0.1, 0.2, 0.7, 0.9),
                                         fixtures::answer_turn(Label::Spoof),
                                         fixtures::fast_reply(Label::Real)};
  std::uniform_int_distribution<int> byte(0, 255), len(0, 96), mode(0, 2), parts(1, 12), edits(1, 4);
  std::uniform_int_distribution<std::size_t> which(0, valid.size() - 1);
  std::uniform_int_distribution<std::size_t> piece(0, pieces.size() - 1);
  std::size_t accepted = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string s;
    const int m = mode(rng);
    if (m == 0) {
      for (int k = len(rng); k > 0; --k) s.push_back(static_cast<char>(byte(rng)));
    } else if (m == 1) {
      s = valid[which(rng)];
      for (int k = edits(rng); k > 0 && !s.empty(); --k) {
        const std::size_t at = std::uniform_int_distribution<std::size_t>(0, s.size() - 1)(rng);
        switch (byte(rng) % 3) {
          case 0: s[at] = static_cast<char>(byte(rng)); break;
          case 1: s.erase(at, 1); break;
          default: s.insert(at, 1, static_cast<char>(byte(rng))); break;
        }
      }
    } else {
      for (int k = parts(rng); k > 0; --k) s += pieces[piece(rng)];
    }
    const auto f = trajectory::parse_fast(s);
    const auto t = trajectory::parse_turn(s);
    accepted += std::holds_alternative<trajectory::FastAnswer>(f) + std::holds_alternative<trajectory::SubAnnotation>(t);
  }
  int round_trips = 0;
  for (int i = 0; i < 100; ++i) {
    const auto t = random_trajectory(rng, i);
    try {
      const auto back = trajectory::parse_trajectory(trajectory::serialize_trajectory(t));
      c.expect(back == t, [&] { return "trajectory " + t.sample_id + " changed in a round trip"; });
      round_trips += back == t;
    } catch (const std::exception& e) {
      c.expect(false, [&] { return t.sample_id + ": " + e.what(); });
    }
  }
  return "100000 fuzz inputs (" + std::to_string(accepted) + " parses accepted), " + std::to_string(round_trips) +
         "/100 round trips";
}

// ---- 6 ----

std::string criterion_state_machine(Check& c) {
  const auto& experts = fixtures::quick_experts();
  std::mt19937_64 rng(66);
  const auto image = fixtures::noise_raster(rng, 32);
  const annotator::Sample spoof{"s", "s.png", Label::Spoof, std::string("photo attack")};

  chat::ScriptedMock immediate(std::vector<std::string>{fixtures::answer_turn(Label::Spoof)});
  const auto a = annotator::annotate_sample(spoof, image, immediate, experts, {}, {});
  c.expect(a.turns.size() == 1 && a.tool_results.empty() && a.status == trajectory::Status::Answered,
           [] { return std::string("(a) immediate answer"); });

  chat::ScriptedMock calls(std::vector<std::string>(6, fixtures::tool_turn(ToolId::HOG)));
  const auto b = annotator::annotate_sample(spoof, image, calls, experts, {}, {});
  c.expect(b.turns.size() == 6 && b.status == trajectory::Status::Unterminated && calls.drained(),
           [] { return std::string("(b) six tool calls"); });

  fixtures::TempDir dir("accept6");
  constexpr int kSamples = 12;
  const auto samples = fixtures::write_synthetic_manifest(dir / "data", kSamples, 67);
  std::map<std::string, std::vector<std::string>> retry, doomed;
  for (const auto& s : samples) {
    const Label wrong = s.label == Label::Real ? Label::Spoof : Label::Real;
    retry[s.id + "#1"] = {fixtures::answer_turn(wrong)};
    retry[s.id + "#2"] = {fixtures::tool_turn(ToolId::LBP), fixtures::answer_turn(s.label)};
    doomed[s.id] = {fixtures::answer_turn(wrong), fixtures::answer_turn(wrong)};
  }
  annotator::PipelineConfig cfg;
  cfg.workers = 4;
  chat::ScriptedMock retry_mock(retry);
  const auto sc = annotator::run_pipeline(samples, retry_mock, experts, cfg, dir / "retry");
  c.expect(sc.reannotated == kSamples && sc.accepted == kSamples && sc.badcase == 0,
           [&] { return "(c) reannotated " + std::to_string(sc.reannotated) + ", accepted " + std::to_string(sc.accepted); });
  chat::ScriptedMock doomed_mock(doomed);
  const auto sd = annotator::run_pipeline(samples, doomed_mock, experts, cfg, dir / "doomed");
  c.expect(sd.badcase == kSamples && sd.accepted == 0 && sd.review == 0 &&
               fixtures::read_lines(dir / "doomed/badcase.jsonl").size() == kSamples,
           [&] { return "(d) badcase " + std::to_string(sd.badcase); });

  annotator::VerifyRules rules;
  rules.synonyms = annotator::load_synonyms(std::filesystem::path(TARFAS_SOURCE_DIR) / "data/hint_synonyms.json");
  static const std::vector<std::string> filler = {"the",    "cheek",  "texture", "looks",   "uniform", "lighting",
                                                  "across", "region", "shows",   "natural", "pores",   "and"};
  std::vector<std::string> types;
  for (const auto& [type, phrases] : rules.synonyms) {
    if (type != "real person") types.push_back(type);
  }
  std::uniform_int_distribution<std::size_t> pick_word(0, filler.size() - 1), pick_type(0, types.size() - 1);
  std::uniform_int_distribution<int> percent(0, 100), kind(0, 2), upper(0, 1);
  int caught = 0, clean_passed = 0;
  for (int i = 0; i < 50; ++i) {
    const std::string type = types[pick_type(rng)];
    std::string leak;
    switch (kind(rng)) {
      case 0: leak = "the hint says " + type; break;
      case 1: leak = "the expert predicts " + std::to_string(percent(rng)) + "% spoof"; break;
      default: leak = "it predicts " + std::to_string(percent(rng)) + "% there's spoof trace"; break;
    }
    for (auto& ch : leak) {
      if (upper(rng)) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
    std::string before, after;
    for (int w = 0; w < 4; ++w) before += filler[pick_word(rng)] + " ";
    for (int w = 0; w < 4; ++w) after += " " + filler[pick_word(rng)];
    const annotator::Sample s{"l" + std::to_string(i), "l.png", Label::Spoof, type};
    const auto leaky = fixtures::make_trajectory(
        s.id, Label::Spoof, std::nullopt,
        {fixtures::tool_turn(ToolId::FFT, before + leak + after), fixtures::answer_turn(Label::Spoof)});
    const auto report = annotator::verify(leaky, s, rules);
    const bool hit = !report.leakage_ok && report.disposition == annotator::Disposition::NeedsReannotation;
    caught += hit;
    c.expect(hit, [&] { return "missed leak: " + leak; });
    const auto clean = fixtures::make_trajectory(
        s.id, Label::Spoof, std::nullopt,
        {fixtures::tool_turn(ToolId::FFT, before + "periodic ripples" + after), fixtures::answer_turn(Label::Spoof)});
    const bool pass = annotator::verify(clean, s, rules).disposition == annotator::Disposition::Accepted;
    clean_passed += pass;
    c.expect(pass, [&] { return "clean control flagged for " + type; });
  }
  return "(a)-(d) ok; leaks caught " + std::to_string(caught) + "/50, clean controls accepted " +
         std::to_string(clean_passed) + "/50";
}

// ---- 7 ----

std::vector<expert::LabeledRaster> expert_set(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<expert::LabeledRaster> data;
  const vistools::ToolCall fft{ToolId::FFT, nlohmann::json::object()};
  for (int i = 0; i < 200; ++i) {
    data.push_back({vistools::dispatch(fft, fixtures::smooth_raster(rng, 32)), false});
    data.push_back({vistools::dispatch(fft, fixtures::noise_raster(rng, 32)), true});
  }
  return data;
}

std::string criterion_expert(Check& c) {
  const auto train = expert_set(700);
  const auto held_out = expert_set(701);
  expert::TrainConfig cfg;
  cfg.seed = 7;
  const auto first = expert::train_expert(ToolId::FFT, train, cfg);
  const auto second = expert::train_expert(ToolId::FFT, train, cfg);
  std::size_t hits = 0;
  for (const auto& d : held_out) hits += (expert::predict(first.model, d.image) >= 0.5) == d.spoof;
  const double held = static_cast<double>(hits) / static_cast<double>(held_out.size());
  c.expect(first.train_accuracy >= 0.95, [&] { return "train accuracy " + fmt(first.train_accuracy); });
  c.expect(held >= 0.90, [&] { return "held-out accuracy " + fmt(held); });
  const bool same = first.model.weights.size() == second.model.weights.size() &&
                    std::memcmp(first.model.weights.data(), second.model.weights.data(),
                                first.model.weights.size() * sizeof(double)) == 0 &&
                    std::memcmp(&first.model.bias, &second.model.bias, sizeof(double)) == 0;
  c.expect(same, [] { return std::string("retrain differs"); });
  return "train " + fmt(first.train_accuracy) + ", held-out " + fmt(held) + (same ? ", retrain identical" : "");
}

// ---- 8 ----

std::string criterion_metrics(Check& c) {
  using metrics::ScoredSample;
  std::mt19937_64 rng(808);
  std::uniform_int_distribution<int> size(2, 200), grid(0, 20);
  std::uniform_real_distribution<double> u(-3, 3);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size(rng);
    std::vector<ScoredSample> s;
    for (int i = 0; i < n; ++i) {
      const double score = trial % 2 ? u(rng) : grid(rng) / 10.0;
      s.push_back({"", score, i % 2 == 0 ? Label::Real : Label::Spoof});
    }
    worst = std::max(worst, std::abs(metrics::auc(s) - oracle::auc_pairs(s)));
    const double base = metrics::auc(s);
    for (const auto& f : std::vector<std::function<double(double)>>{
             [](double x) { return std::exp(x); }, [](double x) { return 3 * x - 7; },
             [](double x) { return x * x * x + x; }}) {
      auto t = s;
      for (auto& r : t) r.score = f(r.score);
      const double moved = metrics::auc(t);
      c.expect(std::abs(moved - base) <= 1e-12, [&] { return "AUC changed under a monotone map: " + fmt(moved - base); });
    }
    const auto eer = metrics::eer_threshold(s);
    const double gap = oracle::min_far_frr_gap(s);
    c.expect(std::abs(std::abs(eer.far - eer.frr) - gap) <= 1e-12, [&] { return "EER gap not minimal"; });
  }
  c.expect(worst <= 1e-12, [&] { return "AUC vs pairs " + fmt(worst); });

  auto four = [](std::initializer_list<std::pair<double, Label>> rows) {
    std::vector<ScoredSample> s;
    for (const auto& [score, label] : rows) s.push_back({"", score, label});
    return s;
  };
  const auto mixed = four({{0.9, Label::Real}, {0.6, Label::Real}, {0.7, Label::Spoof}, {0.2, Label::Spoof}});
  const auto rates = metrics::far_frr(mixed, 0.65);
  c.expect(rates.far == 0.5 && rates.frr == 0.5 && metrics::hter(mixed, 0.65) == 0.5,
           [] { return std::string("4-point FAR/FRR/HTER"); });
  const auto ranks = four({{3, Label::Real}, {1, Label::Real}, {4, Label::Spoof}, {2, Label::Spoof}});
  c.expect(metrics::auc(ranks) == 0.25, [] { return std::string("4-point AUC"); });
  const auto e = metrics::eer_threshold(ranks);
  c.expect(e.threshold == 2.5 && e.far == 0.5 && e.frr == 0.5 && e.eer == 0.5,
           [&] { return "4-point EER at " + fmt(e.threshold); });
  const auto sep = metrics::eer_threshold(
      four({{0.9, Label::Real}, {0.8, Label::Real}, {0.3, Label::Spoof}, {0.1, Label::Spoof}}));
  c.expect(sep.eer == 0.0, [] { return std::string("separated EER"); });
  const auto tie = four({{0.4, Label::Real}, {0.4, Label::Spoof}});
  c.expect(metrics::far_frr(tie, 0.4).far == 1.0 && metrics::hter(tie, 0.4) == 0.5,
           [] { return std::string("tie rule"); });

  const std::string text = expert::guidance_text(ToolId::FFT, 0.87);
  c.expect(text == "This is the result of FFTTool. The expert predicts 87% there's spoof trace",
           [&] { return "guidance: " + text; });
  return "AUC vs pairs max error " + fmt(worst) + "; \"" + text + "\"";
}

// ---- 9 ----

bool valid_jsonl(const std::filesystem::path& p, std::size_t& lines) {
  lines = 0;
  std::ifstream in(p);
  if (!in) return false;
  for (std::string line; std::getline(in, line);) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return false;
    ++lines;
  }
  return true;
}

std::string criterion_end_to_end(Check& c) {
  const auto start = Clock::now();
  fixtures::TempDir dir("accept9");
  const auto samples = fixtures::write_synthetic_manifest(dir / "data", 50, 909);
  fixtures::write_experts(dir / "experts", fixtures::quick_experts());
  std::mt19937_64 rng(910);
  std::uniform_int_distribution<int> ntools(0, 3), tool(1, 5), coin(0, 9);
  std::map<std::string, std::vector<std::string>> script;
  for (const auto& s : samples) {
    std::vector<std::string> replies;
    if (coin(rng) == 0) replies.push_back(fixtures::answer_turn(s.label == Label::Real ? Label::Spoof : Label::Real));
    for (int k = ntools(rng); k > 0; --k) {
      replies.push_back(fixtures::tool_turn(vistools::kAllTools[static_cast<std::size_t>(tool(rng))]));
    }
    if (coin(rng) < 3) replies.push_back(fixtures::zoom_turn(0.2, 0.2, 0.8, 0.8));
    replies.push_back(fixtures::answer_turn(s.label));
    script[s.id] = replies;
  }
  fixtures::write_script(dir / "script.json", script);

  auto run = [&](std::vector<std::string> args, std::string& out) {
    std::ostringstream o, e;
    const int code = cli::run_cli(args, o, e);
    out = o.str();
    c.expect(code == 0, [&] { return args[0] + " " + args[1] + " exited " + std::to_string(code) + ": " + e.str(); });
    return code;
  };
  std::string out;
  run({"annotate", "run", "--manifest", (dir / "data/manifest.jsonl").string(), "--out", (dir / "out").string(),
       "--experts", (dir / "experts").string(), "--mock-script", (dir / "script.json").string(), "--synonyms",
       TARFAS_SOURCE_DIR "/data/hint_synonyms.json", "--seed", "9"},
      out);
  const auto stats = nlohmann::json::parse(out, nullptr, false);
  std::size_t histogram = 0;
  if (!stats.is_discarded()) {
    for (const auto& [name, n] : stats["tool_histogram"].items()) histogram += n.get<std::size_t>();
  }
  c.expect(histogram > 0, [] { return std::string("empty tool histogram"); });
  std::size_t accepted = 0, n = 0;
  c.expect(valid_jsonl(dir / "out/accepted.jsonl", accepted) && accepted > 0, [] { return std::string("accepted.jsonl"); });
  for (const char* f : {"review.jsonl", "badcase.jsonl", "journal.jsonl"}) {
    c.expect(valid_jsonl(dir / "out" / f, n), [&] { return std::string(f) + " is not valid JSONL"; });
  }
  for (const char* mode : {"dt", "st"}) {
    const auto scores = dir / (std::string("scores_") + mode + ".jsonl");
    run({"reward", "score", "--traj", (dir / "out/accepted.jsonl").string(), "--labels",
         (dir / "data/manifest.jsonl").string(), "--mode", mode, "--out", scores.string()},
        out);
    std::size_t lines = 0;
    c.expect(valid_jsonl(scores, lines) && lines == accepted,
             [&] { return std::string(mode) + " scores: " + std::to_string(lines) + " lines"; });
  }
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 60.0, [&] { return "took " + fmt(elapsed) + " s"; });
  return std::to_string(accepted) + " accepted, " + std::to_string(histogram) + " tool calls, " +
         fmt(std::round(elapsed * 100) / 100) + " s";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<std::string(Check&)>>> criteria = {
      {"reward oracle equivalence", criterion_reward_oracle},
      {"worked reward values", criterion_worked_values},
      {"advantage normalization", criterion_advantages},
      {"operator oracles", criterion_operators},
      {"parser totality and round trip", criterion_parsers},
      {"annotation state machine", criterion_state_machine},
      {"expert substitute", criterion_expert},
      {"metrics", criterion_metrics},
      {"end-to-end dry run", criterion_end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check check;
    std::string summary;
    try {
      summary = criteria[i].second(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = check.ok();
    failed += !ok;
    std::cout << (ok ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << summary << '\n';
    for (const auto& f : check.failures) std::cout << "     " << f << '\n';
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
