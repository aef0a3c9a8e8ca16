// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numbers>

#include "tarfas/error.hpp"
#include "tarfas/vistools.hpp"

namespace tarfas::vistools {

namespace {

constexpr double kBinWidthDeg = 180.0 / kHogBins;
constexpr double kL2HysClip = 0.2;
constexpr double kNormEps = 1e-5;

void l2_normalize(std::span<double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double denom = std::sqrt(sq + kNormEps * kNormEps);
  for (double& x : v) x /= denom;
}

}  // namespace

std::vector<double> hog_cell_histograms(const Raster& img, int& cells_x, int& cells_y) {
  if (img.width() < 2 * kHogCell || img.height() < 2 * kHogCell) {
    throw Error(Errc::ImageTooSmall, "HOGTool needs at least 16x16 pixels");
  }
  const Raster gray = imaging::to_grayscale(img);
  const int w = gray.width();
  const int h = gray.height();
  cells_x = w / kHogCell;
  cells_y = h / kHogCell;
  std::vector<double> hist(static_cast<std::size_t>(cells_x) * cells_y * kHogBins, 0.0);

  for (int y = 0; y < cells_y * kHogCell; ++y) {
    for (int x = 0; x < cells_x * kHogCell; ++x) {
      const double gx = static_cast<double>(gray.at(std::min(x + 1, w - 1), y)) -
                        gray.at(std::max(x - 1, 0), y);
      const double gy = static_cast<double>(gray.at(x, std::min(y + 1, h - 1))) -
                        gray.at(x, std::max(y - 1, 0));
      const double magnitude = std::hypot(gx, gy);
      if (magnitude == 0.0) continue;
      double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      if (angle >= 180.0) angle -= 180.0;
      // Bin centres sit at k * 20 degrees; votes split linearly between neighbours.
      const double pos = angle / kBinWidthDeg;
      const int lo = static_cast<int>(std::floor(pos)) % kHogBins;
      const int hi = (lo + 1) % kHogBins;
      const double frac = pos - std::floor(pos);
      double* cell = &hist[(static_cast<std::size_t>(y / kHogCell) * cells_x + x / kHogCell) * kHogBins];
      cell[lo] += magnitude * (1.0 - frac);
      cell[hi] += magnitude * frac;
    }
  }
  return hist;
}

HogResult hog_render(const Raster& img) {
  int cells_x = 0;
  int cells_y = 0;
  const std::vector<double> hist = hog_cell_histograms(img, cells_x, cells_y);

  const int blocks_x = cells_x - kHogBlock + 1;
  const int blocks_y = cells_y - kHogBlock + 1;
  constexpr int kBlockLen = kHogBlock * kHogBlock * kHogBins;
  HogResult result;
  result.features.reserve(static_cast<std::size_t>(blocks_x) * blocks_y * kBlockLen);
  for (int by = 0; by < blocks_y; ++by) {
    for (int bx = 0; bx < blocks_x; ++bx) {
      std::array<double, kBlockLen> block{};
      std::size_t k = 0;
      for (int cy = by; cy < by + kHogBlock; ++cy) {
        for (int cx = bx; cx < bx + kHogBlock; ++cx) {
          const double* cell = &hist[(static_cast<std::size_t>(cy) * cells_x + cx) * kHogBins];
          for (int b = 0; b < kHogBins; ++b) block[k++] = cell[b];
        }
      }
      l2_normalize(block);
      for (double& v : block) v = std::min(v, kL2HysClip);
      l2_normalize(block);
      result.features.insert(result.features.end(), block.begin(), block.end());
    }
  }

  // Star glyphs: one line per bin through the cell centre, drawn perpendicular
  // to the bin's gradient direction, keeping the strongest weight per pixel.
  RealField canvas(img.width(), img.height());
  constexpr double kHalfLen = (kHogCell - 1) / 2.0;
  for (int cy = 0; cy < cells_y; ++cy) {
    for (int cx = 0; cx < cells_x; ++cx) {
      const double* cell = &hist[(static_cast<std::size_t>(cy) * cells_x + cx) * kHogBins];
      const double centre_x = cx * kHogCell + kHalfLen;
      const double centre_y = cy * kHogCell + kHalfLen;
      for (int b = 0; b < kHogBins; ++b) {
        const double weight = cell[b];
        if (weight <= 0.0) continue;
        const double theta = (b * kBinWidthDeg + 90.0) * std::numbers::pi / 180.0;
        const double dx = std::cos(theta);
        const double dy = std::sin(theta);
        for (double t = -kHalfLen; t <= kHalfLen + 1e-9; t += 0.5) {
          const long px = std::lround(centre_x + t * dx);
          const long py = std::lround(centre_y + t * dy);
          if (px < 0 || py < 0 || px >= canvas.width || py >= canvas.height) continue;
          double& dst = canvas.at(static_cast<int>(px), static_cast<int>(py));
          dst = std::max(dst, weight);
        }
      }
    }
  }
  result.rendering = imaging::quantize_minmax(canvas);
  return result;
}

}  // namespace tarfas::vistools
