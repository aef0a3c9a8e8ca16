// SPDX-License-Identifier: Apache-2.0
#include "tarfas/expert.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "tarfas/error.hpp"

namespace tarfas::expert {

namespace {

constexpr double kProbFloor = 1e-12;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce(double p, bool y) {
  const double q = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
  return y ? -std::log(q) : -std::log(1.0 - q);
}

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;
};

Standardizer fit_standardizer(const std::vector<std::vector<double>>& rows) {
  const std::size_t dim = rows.front().size();
  Standardizer s{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < dim; ++j) s.mean[j] += r[j] / n;
  }
  for (std::size_t j = 0; j < dim; ++j) {
    double var = 0.0;
    for (const auto& r : rows) var += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
    const double sd = std::sqrt(var / n);
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

}  // namespace

std::vector<double> extract_features(const Raster& input) {
  if (input.width() < 3 || input.height() < 3) {
    throw Error(Errc::ImageTooSmall, "expert features need at least 3x3 pixels");
  }
  const Raster img = imaging::to_grayscale(input);
  std::vector<double> f(kFeatureDim, 0.0);

  const double pixels = static_cast<double>(img.size());
  for (std::uint8_t v : img.data()) f[v / (256 / kIntensityBins)] += 1.0;
  for (std::size_t i = 0; i < kIntensityBins; ++i) f[i] /= pixels;

  const int w = img.width();
  const int h = img.height();
  const double interior = static_cast<double>(w - 2) * (h - 2);
  const double max_magnitude = 255.0 * std::sqrt(2.0);
  double sum_x = 0, sum_xx = 0, sum_y = 0, sum_yy = 0;
  double* mag_hist = &f[kIntensityBins + 4];
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const double gx = std::abs(static_cast<double>(img.at(x + 1, y)) - img.at(x - 1, y));
      const double gy = std::abs(static_cast<double>(img.at(x, y + 1)) - img.at(x, y - 1));
      sum_x += gx;
      sum_xx += gx * gx;
      sum_y += gy;
      sum_yy += gy * gy;
      const double magnitude = std::hypot(gx, gy);
      const auto bin = std::min<std::size_t>(
          static_cast<std::size_t>(magnitude / max_magnitude * kMagnitudeBins), kMagnitudeBins - 1);
      mag_hist[bin] += 1.0;
    }
  }
  for (std::size_t i = 0; i < kMagnitudeBins; ++i) mag_hist[i] /= interior;
  const double mean_x = sum_x / interior;
  const double mean_y = sum_y / interior;
  f[kIntensityBins + 0] = mean_x / 255.0;
  f[kIntensityBins + 1] = std::max(0.0, sum_xx / interior - mean_x * mean_x) / (255.0 * 255.0);
  f[kIntensityBins + 2] = mean_y / 255.0;
  f[kIntensityBins + 3] = std::max(0.0, sum_yy / interior - mean_y * mean_y) / (255.0 * 255.0);
  return f;
}

TrainResult train_expert(ToolId tool, const std::vector<LabeledRaster>& data, const TrainConfig& cfg) {
  if (tool == ToolId::ZoomIn) throw Error(Errc::InvalidArgument, "ZoomInTool has no expert model");
  const auto spoof_count = std::count_if(data.begin(), data.end(), [](const auto& d) { return d.spoof; });
  const auto real_count = static_cast<std::ptrdiff_t>(data.size()) - spoof_count;
  if (spoof_count == 0 || real_count == 0) {
    throw Error(Errc::DegenerateLabels, "expert training data must contain both classes");
  }
  if (spoof_count < 2 || real_count < 2) {
    throw Error(Errc::InsufficientData, "expert training needs at least two examples per class");
  }
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0)) {
    throw Error(Errc::InvalidArgument, "epochs, batch size and learning rate must be positive");
  }

  std::vector<std::vector<double>> rows;
  rows.reserve(data.size());
  for (const auto& d : data) rows.push_back(extract_features(d.image));
  const Standardizer std_ = fit_standardizer(rows);
  for (auto& r : rows) {
    for (std::size_t j = 0; j < kFeatureDim; ++j) r[j] = (r[j] - std_.mean[j]) / std_.scale[j];
  }

  // Parameters: weights[0..dim) then bias.
  const std::size_t n_params = kFeatureDim + 1;
  std::vector<double> theta(n_params, 0.0), m(n_params, 0.0), v(n_params, 0.0), grad(n_params);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  long step = 0;

  auto logit = [&](const std::vector<double>& x) {
    double z = theta[kFeatureDim];
    for (std::size_t j = 0; j < kFeatureDim; ++j) z += theta[j] * x[j];
    return z;
  };
  auto mean_loss = [&] {
    double loss = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) loss += bce(sigmoid(logit(rows[i])), data[i].spoof);
    return loss / static_cast<double>(rows.size());
  };

  TrainResult result;
  result.loss_history.push_back(mean_loss());
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with an explicit draw so the permutation does not depend on
    // the standard library's shuffle implementation.
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[rng() % (i + 1)]);
    }
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const auto& x = rows[order[b]];
        const double err = sigmoid(logit(x)) - (data[order[b]].spoof ? 1.0 : 0.0);
        for (std::size_t j = 0; j < kFeatureDim; ++j) grad[j] += err * x[j];
        grad[kFeatureDim] += err;
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t j = 0; j < n_params; ++j) {
        const double g = grad[j] * inv;
        m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g;
        v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g * g;
        theta[j] -= cfg.learning_rate * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + kEps);
      }
    }
    result.loss_history.push_back(mean_loss());
  }

  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    correct += ((sigmoid(logit(rows[i])) >= 0.5) == data[i].spoof) ? 1 : 0;
  }
  result.train_accuracy = static_cast<double>(correct) / static_cast<double>(rows.size());

  // Fold (x - mean) / scale into raw-feature weights.
  ExpertModel model;
  model.tool = tool;
  model.weights.resize(kFeatureDim);
  model.bias = theta[kFeatureDim];
  for (std::size_t j = 0; j < kFeatureDim; ++j) {
    model.weights[j] = theta[j] / std_.scale[j];
    model.bias -= theta[j] * std_.mean[j] / std_.scale[j];
  }
  result.model = std::move(model);
  return result;
}

double predict_features(const ExpertModel& model, const std::vector<double>& features) {
  if (model.feature_spec != kFeatureSpec) {
    throw Error(Errc::FeatureSpecMismatch, "model feature spec '" + model.feature_spec +
                                                "' does not match '" + std::string(kFeatureSpec) + "'");
  }
  if (model.weights.size() != features.size()) {
    throw Error(Errc::FeatureSpecMismatch, "model weight length does not match the feature dimension");
  }
  double z = model.bias;
  for (std::size_t j = 0; j < features.size(); ++j) z += model.weights[j] * features[j];
  const double p = sigmoid(z);
  if (std::isnan(p)) throw Error(Errc::NonFinite, "expert logit is not finite");
  return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

double predict(const ExpertModel& model, const Raster& img) {
  if (model.feature_spec != kFeatureSpec || model.weights.size() != kFeatureDim) {
    throw Error(Errc::FeatureSpecMismatch, "expert model does not match " + std::string(kFeatureSpec));
  }
  return predict_features(model, extract_features(img));
}

int percent_of(double p) {
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw Error(Errc::InvalidProbability, "probability must be finite and within [0, 1]");
  }
  // The epsilon keeps decimal halves such as 0.285 from rounding down through
  // their binary representation.
  return static_cast<int>(std::floor(100.0 * p + 0.5 + 1e-9));
}

std::string guidance_text(ToolId tool, double p) {
  return "This is the result of " + std::string(vistools::tool_name(tool)) + ". The expert predicts " +
         std::to_string(percent_of(p)) + "% there's spoof trace";
}

nlohmann::ordered_json model_to_json(const ExpertModel& model) {
  nlohmann::ordered_json j;
  j["tool"] = vistools::tool_name(model.tool);
  j["feature_spec"] = model.feature_spec;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  return j;
}

ExpertModel model_from_json(const nlohmann::json& j) {
  try {
    ExpertModel model;
    const auto tool = vistools::parse_tool_name(j.at("tool").get<std::string>());
    if (!tool || *tool == ToolId::ZoomIn) throw Error(Errc::Decode, "expert model names an invalid tool");
    model.tool = *tool;
    model.feature_spec = j.at("feature_spec").get<std::string>();
    model.weights = j.at("weights").get<std::vector<double>>();
    model.bias = j.at("bias").get<double>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Decode, std::string("malformed expert model: ") + e.what());
  }
}

void save_model(const ExpertModel& model, const std::filesystem::path& path) {
  const auto j = model_to_json(model);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write expert model '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error(Errc::Io, "write failed for '" + path.string() + "'");
}

ExpertModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open expert model '" + path.string() + "'");
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::Decode, "expert model '" + path.string() + "' is not valid JSON");
  return model_from_json(j);
}

ExpertSet load_expert_dir(const std::filesystem::path& dir) {
  ExpertSet experts;
  for (ToolId id : vistools::kAllTools) {
    if (id == ToolId::ZoomIn) continue;
    const auto path = dir / (std::string(vistools::tool_name(id)) + ".json");
    if (std::filesystem::exists(path)) {
      ExpertModel model = load_model(path);
      if (model.tool != id) {
        throw Error(Errc::Decode, "expert file '" + path.string() + "' holds a model for another tool");
      }
      experts.emplace(id, std::move(model));
    }
  }
  return experts;
}

void require_complete(const ExpertSet& experts) {
  for (ToolId id : vistools::kAllTools) {
    if (id != ToolId::ZoomIn && !experts.contains(id)) {
      throw Error(Errc::InvalidArgument, "no expert model for " + std::string(vistools::tool_name(id)));
    }
  }
}

}  // namespace tarfas::expert
