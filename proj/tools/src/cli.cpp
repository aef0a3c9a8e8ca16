// SPDX-License-Identifier: Apache-2.0
#include "tarfas/cli.hpp"

#include <algorithm>
#include <functional>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "tarfas/error.hpp"

namespace tarfas::cli {

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  spdlog::logger log("tarfas", sink);
  log.set_pattern("tarfas: [%l] %v");
  log.set_level(spdlog::level::info);
  Context ctx{out, log};

  CLI::App app{"Visual-tool operators, annotation, reward scoring and metrics for face anti-spoofing", "tarfas"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "Diagnostic verbosity")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
      ->capture_default_str();

  std::function<int()> action;

  // tool
  auto* tool = app.add_subcommand("tool", "Run a visual tool on an image");
  tool->require_subcommand(1);
  ToolApplyOptions tool_apply_opts;
  auto* apply = tool->add_subcommand("apply", "Apply one tool and write the rendered result as PNG");
  apply->add_option("--tool", tool_apply_opts.tool,
                    "ZoomInTool, LBPTool, FFTTool, WaveletTransformTool, EdgeDetectionTool or HOGTool")
      ->required();
  apply->add_option("--in", tool_apply_opts.in, "Input image (PNG, PPM or PGM)")->required()->check(CLI::ExistingFile);
  apply->add_option("--out", tool_apply_opts.out, "Output PNG path")->required();
  apply->add_option("--args", tool_apply_opts.args, "Tool arguments as a JSON object, e.g. '{\"bbox\":[0,0,0.5,0.5]}'")
      ->capture_default_str();
  apply->callback([&] { action = [&] { return tool_apply(tool_apply_opts, ctx); }; });

  // annotate
  auto* annotate = app.add_subcommand("annotate", "Build and verify tool-augmented annotation trajectories");
  annotate->require_subcommand(1);
  AnnotateRunOptions run_opts;
  auto* run = annotate->add_subcommand("run", "Annotate a manifest with re-annotation and a resumable journal");
  run->add_option("--manifest", run_opts.manifest, "Sample manifest (JSONL of id, image, label, spoof_type)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", run_opts.out, "Output directory (default: paths.out_dir from the config)");
  run->add_option("--config", run_opts.config, "JSON config file")->check(CLI::ExistingFile);
  run->add_option("--experts", run_opts.experts,
                  "Directory of <ToolName>.json expert models (default: paths.experts_dir)");
  run->add_option("--mock-script", run_opts.mock_script,
                  "Replay scripted replies from a JSON file instead of calling the endpoint")
      ->check(CLI::ExistingFile);
  run->add_option("--synonyms", run_opts.synonyms, "Hint synonym table (default: annotate.hint_synonyms)");
  run->add_option("--workers", run_opts.workers, "Concurrent annotation workers")->check(CLI::PositiveNumber);
  run->add_option("--l-max", run_opts.l_max, "Maximum reasoning turns per sample")->check(CLI::PositiveNumber);
  run->add_option("--seed", run_opts.seed, "Base seed for per-attempt sampling seeds");
  run->add_flag("--manual-gate", run_opts.manual_gate, "Route automatically accepted items to review.jsonl");
  run->add_flag("--no-renders", run_opts.no_renders, "Do not write tool renders to <out>/renders");
  run->callback([&] { action = [&] { return annotate_run(run_opts, ctx); }; });

  AnnotateVerifyOptions verify_opts;
  auto* verify = annotate->add_subcommand("verify", "Re-run correctness, format and leak checks on trajectories");
  verify->add_option("--traj", verify_opts.traj, "Trajectory JSONL")->required()->check(CLI::ExistingFile);
  verify->add_option("--manifest", verify_opts.manifest, "Sample manifest the trajectories came from")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("--config", verify_opts.config, "JSON config file")->check(CLI::ExistingFile);
  verify->add_option("--synonyms", verify_opts.synonyms, "Hint synonym table (default: annotate.hint_synonyms)");
  verify->add_option("--out", verify_opts.out, "Write reports here instead of stdout");
  verify->add_option("--l-max", verify_opts.l_max, "Maximum reasoning turns per sample")->check(CLI::PositiveNumber);
  verify->add_flag("--manual-gate", verify_opts.manual_gate, "Report NeedsManualReview instead of Accepted");
  verify->add_flag("--check-provenance", verify_opts.check_provenance,
                   "Recompute every tool render from the manifest image and compare digests");
  verify->callback([&] { action = [&] { return annotate_verify(verify_opts, ctx); }; });

  // reward
  auto* reward_cmd = app.add_subcommand("reward", "Score trajectories and normalize group advantages");
  reward_cmd->require_subcommand(1);
  RewardScoreOptions score_opts;
  auto* score = reward_cmd->add_subcommand("score", "Per-rollout reward breakdowns as JSONL");
  score->add_option("--traj", score_opts.traj, "Trajectory JSONL")->required()->check(CLI::ExistingFile);
  score->add_option("--labels", score_opts.labels, "Manifest whose labels override the trajectories' own")
      ->check(CLI::ExistingFile);
  score->add_option("--config", score_opts.config, "JSON config file (reward section)")->check(CLI::ExistingFile);
  score->add_option("--mode", score_opts.mode, "dt: diverse-tool reward; st: single-tool baseline")
      ->check(CLI::IsMember({"dt", "st"}))
      ->capture_default_str();
  score->add_option("--clamp-mode", score_opts.clamp_mode, "Override reward.clamp_mode")
      ->check(CLI::IsMember({"capped_min", "literal_max"}));
  score->add_option("--out", score_opts.out, "Write results here instead of stdout");
  score->callback([&] { action = [&] { return reward_score(score_opts, ctx); }; });

  RewardAdvantagesOptions adv_opts;
  auto* adv = reward_cmd->add_subcommand("advantages", "Group-normalized advantages");
  adv->add_option("--in", adv_opts.in,
                  "JSONL of reward arrays, {\"group\", \"rewards\"} objects, or `reward score` output")
      ->required()
      ->check(CLI::ExistingFile);
  adv->add_option("--group-size", adv_opts.group_size, "Rollouts per group (default: reward.group_size)");
  adv->add_option("--config", adv_opts.config, "JSON config file (reward section)")->check(CLI::ExistingFile);
  adv->add_option("--out", adv_opts.out, "Write results here instead of stdout");
  adv->callback([&] { action = [&] { return reward_advantages(adv_opts, ctx); }; });

  // expert
  auto* expert_cmd = app.add_subcommand("expert", "Train and query per-tool expert scorers");
  expert_cmd->require_subcommand(1);
  ExpertTrainOptions train_opts;
  auto* train = expert_cmd->add_subcommand("train", "Train an expert on tool renders of real/ and spoof/ images");
  train->add_option("--tool", train_opts.tool, "Tool whose renders the expert scores (not ZoomInTool)")->required();
  train->add_option("--data", train_opts.data, "Directory with real/ and spoof/ image subdirectories")
      ->required()
      ->check(CLI::ExistingDirectory);
  train->add_option("--out", train_opts.out, "Model JSON path")->required();
  train->add_option("--eval", train_opts.eval, "Held-out directory with real/ and spoof/ subdirectories")
      ->check(CLI::ExistingDirectory);
  train->add_option("--epochs", train_opts.epochs, "Training epochs")->capture_default_str();
  train->add_option("--lr", train_opts.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--batch", train_opts.batch, "Mini-batch size")->capture_default_str();
  train->add_option("--seed", train_opts.seed, "Shuffle seed")->capture_default_str();
  train->callback([&] { action = [&] { return expert_train(train_opts, ctx); }; });

  ExpertPredictOptions predict_opts;
  auto* predict = expert_cmd->add_subcommand("predict", "Spoof probability and guidance text for one image");
  predict->add_option("--model", predict_opts.model, "Model JSON")->required()->check(CLI::ExistingFile);
  predict->add_option("--in", predict_opts.in, "Input image")->required()->check(CLI::ExistingFile);
  predict->add_flag("--raw", predict_opts.raw, "Input is already a tool render; skip applying the tool");
  predict->callback([&] { action = [&] { return expert_predict(predict_opts, ctx); }; });

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "Face anti-spoofing evaluation metrics");
  metrics_cmd->require_subcommand(1);
  MetricsEvalOptions eval_opts;
  auto* eval = metrics_cmd->add_subcommand("eval", "FAR, FRR, HTER and AUC over scored samples");
  eval->add_option("--scores", eval_opts.scores, "JSONL of id, score (higher = more Real), label")
      ->required()
      ->check(CLI::ExistingFile);
  auto* threshold = eval->add_option("--threshold", eval_opts.threshold, "Decision threshold (default 0.5)");
  auto* eer = eval->add_flag("--eer", eval_opts.eer, "Use the equal-error-rate threshold");
  threshold->excludes(eer);

  eval->callback([&] { action = [&] { return metrics_eval(eval_opts, ctx); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "tarfas: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  log.set_level(spdlog::level::from_str(log_level));
  if (!action) {
    err << app.help();
    return kExitUsage;
  }
  try {
    return action();
  } catch (const Error& e) {
    log.error("{}: {}", to_string(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    log.error("DecodeError: {}", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    log.error("IoError: {}", e.what());
  } catch (const std::exception& e) {
    log.error("{}", e.what());
  }
  return kExitDomain;
}

}  // namespace tarfas::cli
