// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tarfas/imaging.hpp"
#include "tarfas/vistools.hpp"

namespace tarfas::expert {

using imaging::Raster;
using vistools::ToolId;

inline constexpr std::string_view kFeatureSpec = "tarfas-features-v1";
inline constexpr std::size_t kIntensityBins = 64;
inline constexpr std::size_t kMagnitudeBins = 16;
inline constexpr std::size_t kFeatureDim = kIntensityBins + 4 + kMagnitudeBins;

/// 84-d descriptor of a gray tool render:
///   [0, 64)  intensity histogram, L1-normalized
///   [64, 68) mean |gx|, var |gx|, mean |gy|, var |gy| over interior pixels,
///            scaled by 1/255 and 1/255^2
///   [68, 84) central-difference magnitude histogram over [0, 255*sqrt(2)], L1-normalized
/// RGB input is reduced to luma first. Throws ImageTooSmall below 3x3.
std::vector<double> extract_features(const Raster& img);

/// Logistic scorer over extract_features for one non-ZoomIn tool.
struct ExpertModel {
  ToolId tool = ToolId::FFT;
  std::string feature_spec{kFeatureSpec};
  std::vector<double> weights;
  double bias = 0.0;

  friend bool operator==(const ExpertModel&, const ExpertModel&) = default;
};

struct LabeledRaster {
  Raster image;
  bool spoof = false;
};

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.001;
  int batch_size = 16;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ExpertModel model;
  double train_accuracy = 0.0;
  /// Mean binary cross-entropy over the training set, before training and after each epoch.
  std::vector<double> loss_history;
};

/// Mini-batch Adam on standardized features; the standardization is folded back
/// into the exported weights. Deterministic for a given seed.
/// Throws InvalidArgument for ZoomIn, InsufficientData (<2 per class), DegenerateLabels.
TrainResult train_expert(ToolId tool, const std::vector<LabeledRaster>& data, const TrainConfig& cfg);

/// sigmoid(w . phi(img) + b), kept strictly inside (0, 1). Throws FeatureSpecMismatch.
double predict(const ExpertModel& model, const Raster& img);
double predict_features(const ExpertModel& model, const std::vector<double>& features);

/// "This is the result of <ToolName>. The expert predicts <N>% there's spoof trace",
/// N = round-half-up(100 p). Throws InvalidProbability outside [0, 1].
std::string guidance_text(ToolId tool, double p);
int percent_of(double p);

nlohmann::ordered_json model_to_json(const ExpertModel& model);
ExpertModel model_from_json(const nlohmann::json& j);
void save_model(const ExpertModel& model, const std::filesystem::path& path);
ExpertModel load_model(const std::filesystem::path& path);

using ExpertSet = std::map<ToolId, ExpertModel>;

/// Loads "<ToolName>.json" for every non-ZoomIn tool found in `dir`.
ExpertSet load_expert_dir(const std::filesystem::path& dir);
/// Throws InvalidArgument naming the first non-ZoomIn tool without an expert.
void require_complete(const ExpertSet& experts);

}  // namespace tarfas::expert
