// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include <spdlog/logger.h>

namespace tarfas::cli {

struct Context {
  std::ostream& out;
  spdlog::logger& log;
};

struct ToolApplyOptions {
  std::string tool;
  std::string in;
  std::string out;
  std::string args = "{}";
};

struct AnnotateRunOptions {
  std::string manifest;
  std::string out;
  std::string config;
  std::string experts;
  std::string mock_script;
  std::string synonyms;
  std::optional<int> workers;
  std::optional<int> l_max;
  std::optional<std::uint64_t> seed;
  bool manual_gate = false;
  bool no_renders = false;
};

struct AnnotateVerifyOptions {
  std::string traj;
  std::string manifest;
  std::string config;
  std::string synonyms;
  std::string out;
  std::optional<int> l_max;
  bool manual_gate = false;
  bool check_provenance = false;
};

struct RewardScoreOptions {
  std::string traj;
  std::string labels;
  std::string config;
  std::string mode = "dt";
  std::string clamp_mode;
  std::string out;
};

struct RewardAdvantagesOptions {
  std::string in;
  std::string config;
  std::string out;
  std::optional<int> group_size;
};

struct ExpertTrainOptions {
  std::string tool;
  std::string data;
  std::string out;
  std::string eval;
  int epochs = 10;
  double lr = 0.001;
  int batch = 16;
  std::uint64_t seed = 0;
};

struct ExpertPredictOptions {
  std::string model;
  std::string in;
  bool raw = false;
};

struct MetricsEvalOptions {
  std::string scores;
  std::optional<double> threshold;
  bool eer = false;
};

int tool_apply(const ToolApplyOptions& o, Context& ctx);
int annotate_run(const AnnotateRunOptions& o, Context& ctx);
int annotate_verify(const AnnotateVerifyOptions& o, Context& ctx);
int reward_score(const RewardScoreOptions& o, Context& ctx);
int reward_advantages(const RewardAdvantagesOptions& o, Context& ctx);
int expert_train(const ExpertTrainOptions& o, Context& ctx);
int expert_predict(const ExpertPredictOptions& o, Context& ctx);
int metrics_eval(const MetricsEvalOptions& o, Context& ctx);

}  // namespace tarfas::cli
