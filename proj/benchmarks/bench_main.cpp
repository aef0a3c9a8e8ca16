// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "tarfas/reward.hpp"
#include "tarfas/trajectory.hpp"
#include "tarfas/vistools.hpp"

using namespace tarfas;

namespace {

imaging::Raster face(int side) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> u(0, 255);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(side) * side * 3);
  for (auto& p : px) p = static_cast<std::uint8_t>(u(rng));
  return imaging::Raster(side, side, 3, std::move(px));
}

void BM_Tool(benchmark::State& state, vistools::ToolId tool, nlohmann::json args) {
  const auto img = face(static_cast<int>(state.range(0)));
  const vistools::ToolCall call{tool, std::move(args)};
  for (auto _ : state) benchmark::DoNotOptimize(vistools::dispatch(call, img));
  state.SetItemsProcessed(state.iterations());
}

constexpr const char* kRollout[] = {
    R"(<think>periodic ripples near the cheek</think><tool_call>{"name":"FFTTool","arguments":{}}</tool_call>)",
    R"(<think>texture looks flat</think><tool_call>{"name":"LBPTool","arguments":{}}</tool_call>)",
    R"(<think>look closer</think><tool_call>{"name":"ZoomInTool","arguments":{"bbox":[0.2,0.2,0.6,0.6]}}</tool_call>)",
    R"(<think>evidence is consistent</think><answer><Spoof></answer>)",
};

trajectory::Trajectory rollout() {
  trajectory::Trajectory t;
  t.sample_id = "bench";
  t.label = trajectory::Label::Spoof;
  trajectory::FastTurn fast;
  fast.raw = "<Spoof><reason>overall impression</reason>";
  fast.parsed = trajectory::parse_fast(fast.raw);
  t.fast = fast;
  for (const char* text : kRollout) {
    trajectory::Turn turn;
    turn.raw = text;
    turn.parsed = trajectory::parse_turn(text);
    t.turns.push_back(std::move(turn));
  }
  t.status = trajectory::Status::Answered;
  return t;
}

void BM_ParseTurn(benchmark::State& state) {
  for (auto _ : state) {
    for (const char* text : kRollout) benchmark::DoNotOptimize(trajectory::parse_turn(text));
  }
  state.SetItemsProcessed(state.iterations() * 4);
}

void BM_TotalReward(benchmark::State& state) {
  const auto t = rollout();
  const reward::RewardConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(reward::total_reward(t, trajectory::Label::Spoof, cfg));
}

void BM_GroupAdvantages(benchmark::State& state) {
  std::vector<double> r(static_cast<std::size_t>(state.range(0)));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.6, 1.0);
  for (auto& v : r) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(reward::group_advantages(r));
}

void BM_TrajectoryRoundTrip(benchmark::State& state) {
  const auto t = rollout();
  for (auto _ : state) benchmark::DoNotOptimize(trajectory::parse_trajectory(trajectory::serialize_trajectory(t)));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Tool, zoom, vistools::ToolId::ZoomIn, nlohmann::json{{"bbox", {0.25, 0.25, 0.75, 0.75}}})
    ->Arg(224);
BENCHMARK_CAPTURE(BM_Tool, lbp, vistools::ToolId::LBP, nlohmann::json::object())->Arg(64)->Arg(224);
BENCHMARK_CAPTURE(BM_Tool, fft, vistools::ToolId::FFT, nlohmann::json::object())->Arg(64)->Arg(224);
BENCHMARK_CAPTURE(BM_Tool, wavelet, vistools::ToolId::Wavelet, nlohmann::json::object())->Arg(64)->Arg(224);
BENCHMARK_CAPTURE(BM_Tool, edge, vistools::ToolId::EdgeDetection, nlohmann::json::object())->Arg(64)->Arg(224);
BENCHMARK_CAPTURE(BM_Tool, hog, vistools::ToolId::HOG, nlohmann::json::object())->Arg(64)->Arg(224);
BENCHMARK(BM_ParseTurn);
BENCHMARK(BM_TotalReward);
BENCHMARK(BM_GroupAdvantages)->Arg(8)->Arg(64);
BENCHMARK(BM_TrajectoryRoundTrip);

BENCHMARK_MAIN();
