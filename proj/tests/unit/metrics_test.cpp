// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tarfas/error.hpp"
#include "tarfas/metrics.hpp"

using namespace tarfas;
using namespace tarfas::metrics;

namespace {

constexpr Label R = Label::Real;
constexpr Label S = Label::Spoof;

std::vector<ScoredSample> make(std::initializer_list<std::pair<double, Label>> rows) {
  std::vector<ScoredSample> out;
  int i = 0;
  for (const auto& [score, label] : rows) out.push_back({"r" + std::to_string(i++), score, label});
  return out;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::Io;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("FAR and FRR") {
    const auto separated = make({{0.9, R}, {0.8, R}, {0.3, S}, {0.1, S}});
    auto e = far_frr(separated, 0.5);
    CHECK(e.far == 0.0);
    CHECK(e.frr == 0.0);
    e = far_frr(separated, 0.0);
    CHECK(e.far == 1.0);
    CHECK(e.frr == 0.0);

    const auto mixed = make({{0.9, R}, {0.6, R}, {0.7, S}, {0.2, S}});
    e = far_frr(mixed, 0.65);
    CHECK(e.far == 0.5);
    CHECK(e.frr == 0.5);
    CHECK(hter(mixed, 0.65) == 0.5);
    CHECK(hter(separated, 0.5) == 0.0);

    const auto tied = make({{0.4, R}, {0.4, S}, {0.4, S}});
    e = far_frr(tied, 0.4);
    CHECK(e.far == 1.0);
    CHECK(e.frr == 0.0);
    CHECK(hter(tied, 0.4) == 0.5);
  }

  TEST_CASE("AUC") {
    CHECK(auc(make({{0.9, R}, {0.8, R}, {0.3, S}, {0.1, S}})) == 1.0);
    CHECK(auc(make({{3, R}, {1, R}, {4, S}, {2, S}})) == 0.25);
    CHECK(auc(make({{1, R}, {1, R}, {1, S}})) == 0.5);
    std::mt19937_64 rng(51);
    std::uniform_int_distribution<int> coarse(0, 9);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<ScoredSample> s;
      for (int i = 0; i < 30; ++i) s.push_back({"", coarse(rng) / 10.0, i % 3 == 0 ? S : R});
      CHECK(auc(s) == doctest::Approx(oracle::auc_pairs(s)).epsilon(1e-12));
    }
  }

  TEST_CASE("EER") {
    const auto separated = make({{0.9, R}, {0.8, R}, {0.3, S}, {0.1, S}});
    const auto p = eer_threshold(separated);
    CHECK(p.eer == 0.0);
    CHECK(p.threshold == doctest::Approx(0.55));

    const auto four = make({{3, R}, {1, R}, {4, S}, {2, S}});
    const auto cands = candidate_thresholds(four);
    CHECK(cands.size() == 5);
    CHECK(std::isinf(cands.front()));
    CHECK(cands[1] == 1.5);
    CHECK(cands[2] == 2.5);
    CHECK(cands[3] == 3.5);
    const auto q = eer_threshold(four);
    // At 2.5: spoof 4 accepted (FAR 1/2), real 1 rejected (FRR 1/2).
    CHECK(q.threshold == 2.5);
    CHECK(q.far == 0.5);
    CHECK(q.frr == 0.5);
    CHECK(q.eer == 0.5);
    CHECK(std::abs(q.far - q.frr) == oracle::min_far_frr_gap(four));

    const auto pair = make({{0.7, R}, {0.2, S}});
    CHECK(eer_threshold(pair).eer == 0.0);
  }

  TEST_CASE("input checks") {
    const auto only_real = make({{0.5, R}, {0.6, R}});
    CHECK(code_of([&] { far_frr(only_real, 0.5); }) == Errc::MissingClass);
    CHECK(code_of([&] { auc(only_real); }) == Errc::MissingClass);
    const auto nan = make({{std::numeric_limits<double>::quiet_NaN(), R}, {0.1, S}});
    CHECK(code_of([&] { auc(nan); }) == Errc::NonFinite);
    CHECK(code_of([&] { far_frr(make({{0.5, R}, {0.1, S}}), std::numeric_limits<double>::quiet_NaN()); }) ==
          Errc::NonFinite);
  }

  TEST_CASE("score files") {
    fixtures::TempDir dir("scores");
    std::ofstream(dir / "s.jsonl") << R"({"id":"a","score":0.9,"label":"Real"})" << "\n"
                                   << R"({"id":"b","score":0.1,"label":"Spoof"})" << "\n";
    const auto s = read_scores(dir / "s.jsonl");
    REQUIRE(s.size() == 2);
    CHECK(s[1].label == S);
    std::ofstream(dir / "bad.jsonl") << R"({"id":"a","score":0.9,"label":"Real"})" << "\n"
                                     << R"({"id":"b","score":"high","label":"Spoof"})" << "\n";
    try {
      read_scores(dir / "bad.jsonl");
      FAIL("expected Decode");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::Decode);
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
  }
}
