// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "fixtures.hpp"
#include "tarfas/error.hpp"
#include "tarfas/reward.hpp"

using namespace tarfas;
using namespace tarfas::reward;
using fixtures::answer_turn;
using fixtures::fast_reply;
using fixtures::make_trajectory;
using fixtures::tool_turn;
using fixtures::zoom_turn;
using vistools::ToolId;

namespace {

RewardConfig literal() {
  RewardConfig cfg;
  cfg.clamp_mode = ClampMode::LiteralMax;
  return cfg;
}

}  // namespace

TEST_SUITE("reward") {
  TEST_CASE("fast score") {
    CHECK(score_fast(trajectory::FastTurn{"", trajectory::FastAnswer{Label::Real, "x"}}, Label::Real) == 1.0);
    CHECK(score_fast(trajectory::FastTurn{"", trajectory::FastAnswer{Label::Real, "x"}}, Label::Spoof) == 0.0);
    CHECK(score_fast(trajectory::FastTurn{"", trajectory::FormatViolation{}}, Label::Spoof) == -1.0);
    CHECK(score_fast(std::nullopt, Label::Spoof) == -1.0);
  }

  TEST_CASE("reasoning score") {
    const auto clean = make_trajectory("a", Label::Real, std::nullopt,
                                       {tool_turn(ToolId::FFT), answer_turn(Label::Real)});
    CHECK(score_reasoning(clean, Label::Real) == 1.0);
    CHECK(score_reasoning(clean, Label::Spoof) == 0.0);
    const auto invalid = make_trajectory(
        "b", Label::Real, std::nullopt,
        {R"(<think>x</think><tool_call>{"name":"LaserTool","arguments":{}}</tool_call>)", answer_turn(Label::Real)});
    CHECK(score_reasoning(invalid, Label::Real) == -1.0);
    const auto failed = make_trajectory("c", Label::Real, std::nullopt,
                                        {tool_turn(ToolId::FFT), answer_turn(Label::Real)}, {0});
    CHECK(score_reasoning(failed, Label::Real) == -1.0);
    const auto no_answer = make_trajectory("d", Label::Real, std::nullopt, {tool_turn(ToolId::FFT)});
    CHECK(score_reasoning(no_answer, Label::Real) == -1.0);
    const auto early = make_trajectory("e", Label::Real, std::nullopt,
                                       {answer_turn(Label::Real), answer_turn(Label::Real)});
    CHECK(score_reasoning(early, Label::Real) == -1.0);
    CHECK(score_reasoning(make_trajectory("f", Label::Real, std::nullopt, {}), Label::Real) == -1.0);
  }

  TEST_CASE("tool diversity") {
    const auto none = make_trajectory("a", Label::Real, std::nullopt, {answer_turn(Label::Real)});
    CHECK(tool_diversity(none, literal()) == doctest::Approx(1.2).epsilon(1e-15));
    CHECK(tool_diversity(none, RewardConfig{}) == 0.0);

    const auto two = make_trajectory("b", Label::Real, std::nullopt,
                                     {tool_turn(ToolId::FFT), tool_turn(ToolId::LBP), answer_turn(Label::Real)});
    CHECK(tool_diversity(two, RewardConfig{}) == doctest::Approx(0.4).epsilon(1e-15));

    const auto thrice = make_trajectory(
        "c", Label::Real, std::nullopt,
        {tool_turn(ToolId::FFT), tool_turn(ToolId::FFT), tool_turn(ToolId::FFT), answer_turn(Label::Real)});
    CHECK(tool_diversity(thrice, literal()) == doctest::Approx(1.6).epsilon(1e-15));
    CHECK(tool_diversity(thrice, RewardConfig{}) == doctest::Approx(0.2).epsilon(1e-15));

    // Failed executions do not count.
    const auto failed = make_trajectory("d", Label::Real, std::nullopt,
                                        {tool_turn(ToolId::FFT), answer_turn(Label::Real)}, {0});
    CHECK(tool_counts(failed)[vistools::index_of(ToolId::FFT)] == 0);
  }

  TEST_CASE("tool score gate") {
    const auto two = make_trajectory("b", Label::Real, std::nullopt,
                                     {tool_turn(ToolId::FFT), tool_turn(ToolId::LBP), answer_turn(Label::Real)});
    CHECK(score_tool(two, Label::Real, RewardConfig{}) == doctest::Approx(0.4).epsilon(1e-15));
    const auto none = make_trajectory("a", Label::Real, std::nullopt, {answer_turn(Label::Real)});
    CHECK(score_tool(none, Label::Spoof, literal()) == 0.0);
    const auto broken = make_trajectory("c", Label::Real, std::nullopt, {tool_turn(ToolId::FFT), "junk"});
    CHECK(score_tool(broken, Label::Real, literal()) == 0.0);
  }

  TEST_CASE("total reward") {
    const auto perfect = make_trajectory(
        "p", Label::Spoof, fast_reply(Label::Spoof),
        {tool_turn(ToolId::FFT), tool_turn(ToolId::LBP), answer_turn(Label::Spoof)});
    const auto r = total_reward(perfect, Label::Spoof, RewardConfig{});
    CHECK(r.total == doctest::Approx(0.76).epsilon(1e-15));
    CHECK(r.fast_fmt_ok);
    CHECK(r.rsn_fmt_ok);
    CHECK(r.valid_flags == std::vector<bool>{true, true, false});
    CHECK(r.per_tool_counts == std::array<int, 6>{0, 1, 1, 0, 0, 0});

    const auto violation = make_trajectory("v", Label::Spoof, std::string("junk"), {"junk"});
    const auto v = total_reward(violation, Label::Spoof, RewardConfig{});
    CHECK(v.total == doctest::Approx(-0.6).epsilon(1e-15));
    CHECK_FALSE(v.fast_fmt_ok);
    CHECK_FALSE(v.rsn_fmt_ok);

    const auto plain = make_trajectory("q", Label::Real, fast_reply(Label::Real), {answer_turn(Label::Real)});
    CHECK(total_reward(plain, Label::Real, RewardConfig{}).total == doctest::Approx(0.6).epsilon(1e-15));
  }

  TEST_CASE("group advantages") {
    const std::vector<double> flat = {1, 1, 1, 1};
    CHECK(group_advantages(flat) == std::vector<double>{0, 0, 0, 0});
    const std::vector<double> pair = {0, 2};
    CHECK(group_advantages(pair) == std::vector<double>{-1, 1});
    const std::vector<double> one = {3};
    try {
      group_advantages(one);
      FAIL("expected GroupTooSmall");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::GroupTooSmall);
    }
  }

  TEST_CASE("single-tool baseline") {
    const auto zoom = make_trajectory("z", Label::Real, std::nullopt,
                                      {zoom_turn(0.1, 0.1, 0.6, 0.6), answer_turn(Label::Real)});
    CHECK(st_grpo_reward(zoom, Label::Real) == 2.0);
    CHECK(st_grpo_reward(zoom, Label::Spoof) == 0.0);
    const auto none = make_trajectory("n", Label::Real, std::nullopt, {answer_turn(Label::Real)});
    CHECK(st_grpo_reward(none, Label::Real) == 1.0);
    const auto fft = make_trajectory("f", Label::Real, std::nullopt, {tool_turn(ToolId::FFT), answer_turn(Label::Real)});
    CHECK(st_grpo_reward(fft, Label::Real) == 0.0);
    CHECK(st_grpo_reward(fft, Label::Spoof) == -1.0);
    const auto failed_zoom = make_trajectory("g", Label::Real, std::nullopt,
                                             {zoom_turn(0.1, 0.1, 0.6, 0.6), answer_turn(Label::Real)}, {0});
    CHECK(st_grpo_breakdown(failed_zoom, Label::Real).fmt == -1.0);
    CHECK(st_grpo_breakdown(failed_zoom, Label::Real).tool_bonus == 0.0);
  }

  TEST_CASE("bounds") {
    RewardConfig cfg;
    CHECK(max_total_reward(cfg, 6) == doctest::Approx(0.1 + 0.5 + 0.4 * 1.0));
    CHECK(max_total_reward(cfg, 100) == doctest::Approx(0.1 + 0.5 + 0.4 * 1.2));
    CHECK(min_total_reward(cfg) == doctest::Approx(-0.6));
    CHECK(max_total_reward(literal(), 3) == doctest::Approx(0.6 + 0.4 * (1.2 + 0.2)));
  }

  TEST_CASE("config validation") {
    RewardConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.group_size = 1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = RewardConfig{};
    cfg.gamma[3] = -0.1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    CHECK(parse_clamp_mode("capped_min") == ClampMode::CappedMin);
    CHECK_FALSE(parse_clamp_mode("CappedMin").has_value());
  }
}
