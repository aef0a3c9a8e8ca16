// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "tarfas/annotator.hpp"
#include "tarfas/config.hpp"
#include "tarfas/error.hpp"
#include "tarfas/expert.hpp"
#include "tarfas/metrics.hpp"
#include "tarfas/reward.hpp"

namespace tarfas::cli {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kDefaultSynonyms = "data/hint_synonyms.json";

std::string dump(const ordered_json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

/// Calls `fn(line, line_no)` for every non-blank line; errors are prefixed with the location.
void for_each_line(const fs::path& path, const std::function<void(const std::string&)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "'");
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(line);
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw Error(Errc::Decode, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

json parse_object_line(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::Decode, "invalid JSON");
  return j;
}

/// Writes to --out when given, stdout otherwise.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : target_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::trunc);
      if (!file_) throw Error(Errc::Io, "cannot open '" + path + "' for writing");
      target_ = &file_;
    }
  }
  void line(const ordered_json& j) { *target_ << dump(j) << '\n'; }
  void finish() {
    target_->flush();
    if (!*target_) throw Error(Errc::Io, "output write failed");
  }

 private:
  std::ofstream file_;
  std::ostream* target_;
};

config::AppConfig load_app_config(const std::string& path) {
  return path.empty() ? config::AppConfig{} : config::load_config(path);
}

annotator::SynonymTable load_synonym_table(const std::string& flag, const fs::path& configured,
                                           spdlog::logger& log) {
  const fs::path path = flag.empty() ? configured : fs::path(flag);
  if (!fs::exists(path) && flag.empty() && configured == kDefaultSynonyms) {
    log.warn("synonym table {} not found; hint leak checks use the spoof type only", path.string());
    return {};
  }
  return annotator::load_synonyms(path);
}

std::map<std::string, annotator::Sample> manifest_by_id(const std::string& path) {
  std::map<std::string, annotator::Sample> out;
  for (auto& s : annotator::read_manifest(path)) {
    const std::string id = s.id;
    out.emplace(id, std::move(s));
  }
  return out;
}

ordered_json tool_count_json(const std::array<int, vistools::kToolCount>& counts) {
  ordered_json j = ordered_json::object();
  for (auto id : vistools::kAllTools) j[std::string(vistools::tool_name(id))] = counts[vistools::index_of(id)];
  return j;
}

ordered_json nullable(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::vector<fs::path> image_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::Io, "'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".PNG") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<expert::LabeledRaster> load_labeled(const fs::path& root, vistools::ToolId tool) {
  std::vector<expert::LabeledRaster> data;
  const vistools::ToolCall call{tool, json::object()};
  for (const auto& [sub, spoof] : {std::pair{"real", false}, std::pair{"spoof", true}}) {
    for (const auto& file : image_files(root / sub)) {
      data.push_back({vistools::dispatch(call, imaging::load_image(file)), spoof});
    }
  }
  return data;
}

vistools::ToolId require_tool(const std::string& name) {
  const auto tool = vistools::parse_tool_name(name);
  if (!tool) throw Error(Errc::InvalidTool, "unknown tool '" + name + "'");
  return *tool;
}

}  // namespace

int tool_apply(const ToolApplyOptions& o, Context& ctx) {
  const auto tool = require_tool(o.tool);
  const json args = json::parse(o.args, nullptr, false);
  if (args.is_discarded()) throw Error(Errc::InvalidArgument, "--args is not valid JSON");
  const imaging::Raster input = imaging::load_image(o.in);
  const imaging::Raster out = vistools::dispatch({tool, args}, input);
  imaging::encode_png(out, o.out);
  ctx.out << dump(ordered_json{{"tool", o.tool},
                               {"width", out.width()},
                               {"height", out.height()},
                               {"digest", imaging::raster_digest(out)}})
          << '\n';
  return 0;
}

int annotate_run(const AnnotateRunOptions& o, Context& ctx) {
  config::AppConfig cfg = load_app_config(o.config);
  if (o.workers) cfg.annotate.workers = *o.workers;
  if (o.l_max) {
    if (*o.l_max < 1) throw Error(Errc::Config, "--l-max must be at least 1");
    cfg.annotate.l_max = static_cast<std::size_t>(*o.l_max);
  }
  if (o.seed) cfg.annotate.seed = *o.seed;
  if (o.manual_gate) cfg.annotate.manual_gate = true;
  cfg.validate();

  const auto samples = annotator::read_manifest(o.manifest);
  const auto experts = expert::load_expert_dir(o.experts.empty() ? cfg.paths.experts_dir : fs::path(o.experts));

  annotator::PipelineConfig pc;
  pc.annotate.l_max = cfg.annotate.l_max;
  pc.annotate.resend_on_format_error = cfg.annotate.resend_on_format_error;
  pc.rules.synonyms = load_synonym_table(o.synonyms, cfg.annotate.hint_synonyms, ctx.log);
  pc.rules.manual_gate = cfg.annotate.manual_gate;
  pc.rules.l_max = cfg.annotate.l_max;
  pc.workers = cfg.annotate.workers;
  pc.seed = cfg.annotate.seed;
  pc.save_renders = !o.no_renders;

  std::unique_ptr<chat::ChatClient> client;
  if (!o.mock_script.empty()) {
    ctx.log.info("using scripted replies from {}", o.mock_script);
    client = std::make_unique<chat::ScriptedMock>(chat::ScriptedMock::from_file(o.mock_script));
  } else {
    client = std::make_unique<chat::HttpChatClient>(cfg.client);
  }
  const fs::path out_dir = o.out.empty() ? cfg.paths.out_dir : fs::path(o.out);
  ctx.log.info("annotating {} samples with {} workers into {}", samples.size(), pc.workers, out_dir.string());
  const auto stats = annotator::run_pipeline(samples, *client, experts, pc, out_dir);
  ctx.out << stats_to_json(stats).dump(2) << '\n';
  return 0;
}

int annotate_verify(const AnnotateVerifyOptions& o, Context& ctx) {
  const config::AppConfig cfg = load_app_config(o.config);
  annotator::VerifyRules rules;
  rules.synonyms = load_synonym_table(o.synonyms, cfg.annotate.hint_synonyms, ctx.log);
  rules.manual_gate = o.manual_gate || cfg.annotate.manual_gate;
  rules.l_max = o.l_max ? static_cast<std::size_t>(*o.l_max) : cfg.annotate.l_max;
  const auto manifest = manifest_by_id(o.manifest);

  Sink sink(o.out, ctx.out);
  std::size_t total = 0;
  std::size_t passed = 0;
  for_each_line(o.traj, [&](const std::string& line) {
    const auto t = trajectory::parse_trajectory(line);
    const auto it = manifest.find(t.sample_id);
    if (it == manifest.end()) throw Error(Errc::Decode, "sample '" + t.sample_id + "' is not in the manifest");
    const auto report = annotator::verify(t, it->second, rules);
    ordered_json j = annotator::report_to_json(report, t.sample_id);
    if (o.check_provenance) {
      const auto bad = annotator::provenance_mismatches(t, imaging::load_image(it->second.image));
      j["provenance_ok"] = bad.empty();
      j["provenance_mismatches"] = bad;
    }
    sink.line(j);
    ++total;
    if (report.automated_pass()) ++passed;
  });
  sink.finish();
  ctx.log.info("{} of {} trajectories pass automated verification", passed, total);
  return 0;
}

int reward_score(const RewardScoreOptions& o, Context& ctx) {
  if (o.mode != "dt" && o.mode != "st") throw Error(Errc::InvalidArgument, "--mode must be dt or st");
  config::AppConfig cfg = load_app_config(o.config);
  if (!o.clamp_mode.empty()) {
    const auto mode = reward::parse_clamp_mode(o.clamp_mode);
    if (!mode) throw Error(Errc::InvalidArgument, "--clamp-mode must be literal_max or capped_min");
    cfg.reward.clamp_mode = *mode;
  }
  cfg.reward.validate();
  std::map<std::string, annotator::Sample> labels;
  if (!o.labels.empty()) labels = manifest_by_id(o.labels);

  // Parse everything first so a bad line produces no partial output.
  std::vector<trajectory::Trajectory> trajectories;
  for_each_line(o.traj, [&](const std::string& line) { trajectories.push_back(trajectory::parse_trajectory(line)); });

  Sink sink(o.out, ctx.out);
  for (const auto& t : trajectories) {
    trajectory::Label label = t.label;
    if (!o.labels.empty()) {
      const auto it = labels.find(t.sample_id);
      if (it == labels.end()) throw Error(Errc::Decode, "sample '" + t.sample_id + "' has no label in " + o.labels);
      label = it->second.label;
    }
    ordered_json j;
    j["sample_id"] = t.sample_id;
    j["label"] = trajectory::to_string(label);
    j["mode"] = o.mode;
    if (o.mode == "dt") {
      const auto b = reward::total_reward(t, label, cfg.reward);
      j["r_fast"] = b.r_fast;
      j["r_rsn"] = b.r_rsn;
      j["f_tool"] = b.f_tool;
      j["r_tool"] = b.r_tool;
      j["total"] = b.total;
      j["fast_fmt_ok"] = b.fast_fmt_ok;
      j["rsn_fmt_ok"] = b.rsn_fmt_ok;
      j["valid_flags"] = b.valid_flags;
      j["tool_counts"] = tool_count_json(b.per_tool_counts);
    } else {
      const auto b = reward::st_grpo_breakdown(t, label);
      j["fmt"] = b.fmt;
      j["acc"] = b.acc;
      j["tool_bonus"] = b.tool_bonus;
      j["total"] = b.total;
    }
    sink.line(j);
  }
  sink.finish();
  ctx.log.info("scored {} trajectories", trajectories.size());
  return 0;
}

int reward_advantages(const RewardAdvantagesOptions& o, Context& ctx) {
  const config::AppConfig cfg = load_app_config(o.config);
  const int group_size = o.group_size.value_or(cfg.reward.group_size);
  if (group_size < 2) throw Error(Errc::GroupTooSmall, "--group-size must be at least 2");

  struct Group {
    ordered_json id;
    std::vector<double> rewards;
  };
  std::vector<Group> groups;
  std::vector<double> pending;
  std::size_t flat_lines = 0;

  auto numbers = [](const json& arr) {
    std::vector<double> out;
    for (const auto& v : arr) {
      if (!v.is_number()) throw Error(Errc::Decode, "rewards must be numbers");
      out.push_back(v.get<double>());
    }
    return out;
  };
  for_each_line(o.in, [&](const std::string& line) {
    const json j = parse_object_line(line);
    if (j.is_array()) {
      groups.push_back({ordered_json(groups.size()), numbers(j)});
    } else if (j.is_object() && j.contains("rewards") && j["rewards"].is_array()) {
      ordered_json id = groups.size();
      if (const auto it = j.find("group"); it != j.end()) id = ordered_json::parse(it->dump());
      groups.push_back({std::move(id), numbers(j["rewards"])});
    } else if (j.is_object() && j.contains("total") && j["total"].is_number()) {
      // One scored rollout per line; consecutive lines form a group.
      ++flat_lines;
      pending.push_back(j["total"].get<double>());
      if (pending.size() == static_cast<std::size_t>(group_size)) {
        groups.push_back({ordered_json(groups.size()), std::move(pending)});
        pending.clear();
      }
    } else {
      throw Error(Errc::Decode, "expected an array of rewards, {\"rewards\": [...]}, or a scored rollout");
    }
    if (!groups.empty() && groups.back().rewards.size() != static_cast<std::size_t>(group_size)) {
      throw Error(Errc::GroupTooSmall, "group has " + std::to_string(groups.back().rewards.size()) +
                                           " rewards, expected " + std::to_string(group_size));
    }
  });
  if (!pending.empty()) {
    throw Error(Errc::GroupTooSmall, std::to_string(flat_lines) + " scored rollouts do not fill groups of " +
                                         std::to_string(group_size));
  }

  Sink sink(o.out, ctx.out);
  for (const auto& g : groups) {
    const auto adv = reward::group_advantages(g.rewards, cfg.reward.std_epsilon);
    sink.line(ordered_json{{"group", g.id}, {"rewards", g.rewards}, {"advantages", adv}});
  }
  sink.finish();
  return 0;
}

int expert_train(const ExpertTrainOptions& o, Context& ctx) {
  const auto tool = require_tool(o.tool);
  const auto data = load_labeled(o.data, tool);
  ctx.log.info("training {} expert on {} renders", o.tool, data.size());
  expert::TrainConfig tc;
  tc.epochs = o.epochs;
  tc.learning_rate = o.lr;
  tc.batch_size = o.batch;
  tc.seed = o.seed;
  const auto result = expert::train_expert(tool, data, tc);
  expert::save_model(result.model, o.out);

  ordered_json j;
  j["tool"] = o.tool;
  j["samples"] = data.size();
  j["train_accuracy"] = result.train_accuracy;
  j["final_loss"] = result.loss_history.back();
  if (!o.eval.empty()) {
    const auto held_out = load_labeled(o.eval, tool);
    std::size_t hits = 0;
    for (const auto& s : held_out) {
      if ((expert::predict(result.model, s.image) >= 0.5) == s.spoof) ++hits;
    }
    j["eval_samples"] = held_out.size();
    j["eval_accuracy"] = held_out.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(held_out.size());
  }
  ctx.out << dump(j) << '\n';
  return 0;
}

int expert_predict(const ExpertPredictOptions& o, Context& ctx) {
  const auto model = expert::load_model(o.model);
  imaging::Raster img = imaging::load_image(o.in);
  if (!o.raw) img = vistools::dispatch({model.tool, json::object()}, img);
  const double p = expert::predict(model, img);
  ctx.out << dump(ordered_json{{"tool", vistools::tool_name(model.tool)},
                               {"p", p},
                               {"guidance", expert::guidance_text(model.tool, p)}})
          << '\n';
  return 0;
}

int metrics_eval(const MetricsEvalOptions& o, Context& ctx) {
  const auto samples = metrics::read_scores(o.scores);
  ordered_json j;
  double threshold = o.threshold.value_or(0.5);
  std::optional<metrics::EerPoint> eer;
  if (o.eer) {
    eer = metrics::eer_threshold(samples);
    threshold = eer->threshold;
  }
  const auto rates = metrics::far_frr(samples, threshold);
  j["far"] = rates.far;
  j["frr"] = rates.frr;
  j["hter"] = (rates.far + rates.frr) / 2.0;
  j["auc"] = metrics::auc(samples);
  j["threshold"] = nullable(threshold);
  if (eer) j["eer"] = eer->eer;
  ctx.out << dump(j) << '\n';
  return 0;
}

}  // namespace tarfas::cli
