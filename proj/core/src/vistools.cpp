// SPDX-License-Identifier: Apache-2.0
#include "tarfas/vistools.hpp"

#include <algorithm>
#include <cmath>

#include "tarfas/error.hpp"
#include "tarfas/spectral.hpp"

namespace tarfas::vistools {

namespace {

constexpr std::array<std::string_view, kToolCount> kToolNames = {
    "ZoomInTool", "LBPTool", "FFTTool", "WaveletTransformTool", "EdgeDetectionTool", "HOGTool"};

void require_min_size(const Raster& img, int min_side, std::string_view what) {
  if (img.width() < min_side || img.height() < min_side) {
    throw Error(Errc::ImageTooSmall, std::string(what) + " needs at least " +
                                         std::to_string(min_side) + "x" +
                                         std::to_string(min_side) + " pixels");
  }
}

int clamp_index(int v, int n) { return std::clamp(v, 0, n - 1); }

}  // namespace

std::string_view tool_name(ToolId id) noexcept { return kToolNames[index_of(id)]; }

std::optional<ToolId> parse_tool_name(std::string_view name) noexcept {
  for (ToolId id : kAllTools) {
    if (kToolNames[index_of(id)] == name) return id;
  }
  return std::nullopt;
}

BBox validate_bbox(BBox box) {
  for (double v : {box.x0, box.y0, box.x1, box.y1}) {
    if (!std::isfinite(v)) throw Error(Errc::InvalidArgument, "bbox coordinates must be finite");
  }
  box.x0 = std::clamp(box.x0, 0.0, 1.0);
  box.y0 = std::clamp(box.y0, 0.0, 1.0);
  box.x1 = std::clamp(box.x1, 0.0, 1.0);
  box.y1 = std::clamp(box.y1, 0.0, 1.0);
  if (!(box.x0 < box.x1) || !(box.y0 < box.y1)) {
    throw Error(Errc::InvalidArgument, "bbox must satisfy x0 < x1 and y0 < y1");
  }
  constexpr double kSlack = 1e-9;
  if ((box.x1 - box.x0) * kReferenceSide < kMinBoxPixels - kSlack ||
      (box.y1 - box.y0) * kReferenceSide < kMinBoxPixels - kSlack) {
    throw Error(Errc::InvalidArgument, "bbox is smaller than 8x8 pixels at 224x224");
  }
  return box;
}

void validate_arguments(ToolId tool, const nlohmann::json& arguments) {
  if (!arguments.is_object()) throw Error(Errc::InvalidArgument, "tool arguments must be an object");
  if (tool != ToolId::ZoomIn) {
    if (!arguments.empty()) {
      throw Error(Errc::InvalidArgument, std::string(tool_name(tool)) + " takes no arguments");
    }
    return;
  }
  if (arguments.size() != 1 || !arguments.contains("bbox")) {
    throw Error(Errc::InvalidArgument, "ZoomInTool takes exactly one argument, \"bbox\"");
  }
  const auto& bbox = arguments.at("bbox");
  if (!bbox.is_array() || bbox.size() != 4 ||
      !std::all_of(bbox.begin(), bbox.end(), [](const auto& v) { return v.is_number(); })) {
    throw Error(Errc::InvalidArgument, "bbox must be an array of four numbers");
  }
  validate_bbox({bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(),
                 bbox[3].get<double>()});
}

Raster zoom_in(const Raster& img, const BBox& box) {
  const BBox b = validate_bbox(box);
  const int w = img.width();
  const int h = img.height();
  const int left = std::clamp(static_cast<int>(std::floor(b.x0 * w)), 0, w - 1);
  const int top = std::clamp(static_cast<int>(std::floor(b.y0 * h)), 0, h - 1);
  const int right = std::clamp(static_cast<int>(std::ceil(b.x1 * w)), left + 1, w);
  const int bottom = std::clamp(static_cast<int>(std::ceil(b.y1 * h)), top + 1, h);

  Raster crop(right - left, bottom - top, img.channels());
  for (int y = top; y < bottom; ++y) {
    for (int x = left; x < right; ++x) {
      for (int c = 0; c < img.channels(); ++c) crop.at(x - left, y - top, c) = img.at(x, y, c);
    }
  }
  return imaging::resize_bilinear(crop, w, h);
}

Raster lbp_map(const Raster& img) {
  require_min_size(img, 3, "LBPTool");
  const Raster gray = imaging::to_grayscale(img);
  // Clockwise from top-left; the first entry becomes the most significant bit.
  static constexpr std::array<std::array<int, 2>, 8> kNeighbours = {
      {{-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}}};
  Raster out(gray.width(), gray.height(), 1);
  for (int y = 1; y + 1 < gray.height(); ++y) {
    for (int x = 1; x + 1 < gray.width(); ++x) {
      const std::uint8_t centre = gray.at(x, y);
      unsigned code = 0;
      for (const auto& [dx, dy] : kNeighbours) {
        code = (code << 1) | (gray.at(x + dx, y + dy) >= centre ? 1u : 0u);
      }
      out.at(x, y) = static_cast<std::uint8_t>(code);
    }
  }
  return out;
}

RealField log_magnitude_spectrum(const Raster& img) {
  const Raster gray = imaging::to_grayscale(img);
  spectral::ComplexField freq = spectral::zero_pad_pow2(imaging::to_field(gray));
  spectral::fft_2d(freq, false);
  RealField magnitude(freq.width, freq.height);
  for (std::size_t i = 0; i < freq.values.size(); ++i) {
    magnitude.values[i] = std::log1p(std::abs(freq.values[i]));
  }
  return spectral::fftshift(magnitude);
}

Raster fft_spectrum(const Raster& img) {
  const Raster rendered = imaging::quantize_minmax(log_magnitude_spectrum(img));
  return imaging::resize_bilinear(rendered, img.width(), img.height());
}

HaarBands haar_decompose(const Raster& img) {
  const Raster gray = imaging::to_grayscale(img);
  const int pw = gray.width() + (gray.width() % 2);
  const int ph = gray.height() + (gray.height() % 2);
  auto sample = [&](int x, int y) -> double {
    return gray.at(std::min(x, gray.width() - 1), std::min(y, gray.height() - 1));
  };
  const int bw = pw / 2;
  const int bh = ph / 2;
  HaarBands bands{RealField(bw, bh), RealField(bw, bh), RealField(bw, bh), RealField(bw, bh)};
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      const double a = sample(2 * bx, 2 * by);
      const double b = sample(2 * bx + 1, 2 * by);
      const double c = sample(2 * bx, 2 * by + 1);
      const double d = sample(2 * bx + 1, 2 * by + 1);
      // Rows first: low = (a+b)/2, high = (a-b)/2; then the same down each column.
      const double low_top = (a + b) / 2.0, high_top = (a - b) / 2.0;
      const double low_bottom = (c + d) / 2.0, high_bottom = (c - d) / 2.0;
      bands.ll.at(bx, by) = (low_top + low_bottom) / 2.0;
      bands.lh.at(bx, by) = (high_top + high_bottom) / 2.0;
      bands.hl.at(bx, by) = (low_top - low_bottom) / 2.0;
      bands.hh.at(bx, by) = (high_top - high_bottom) / 2.0;
    }
  }
  return bands;
}

Raster haar_wavelet(const Raster& img) {
  const HaarBands bands = haar_decompose(img);
  const int bw = bands.ll.width;
  const int bh = bands.ll.height;
  Raster canvas(2 * bw, 2 * bh, 1);
  auto blit = [&](const RealField& band, int ox, int oy) {
    const Raster tile = imaging::quantize_minmax(band);
    for (int y = 0; y < bh; ++y) {
      for (int x = 0; x < bw; ++x) canvas.at(ox + x, oy + y) = tile.at(x, y);
    }
  };
  blit(bands.ll, 0, 0);
  blit(bands.lh, bw, 0);
  blit(bands.hl, 0, bh);
  blit(bands.hh, bw, bh);
  if (canvas.width() == img.width() && canvas.height() == img.height()) return canvas;

  Raster out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.at(x, y) = canvas.at(x, y);
  }
  return out;
}

RealField laplacian_response(const Raster& img) {
  require_min_size(img, 3, "EdgeDetectionTool");
  const Raster gray = imaging::to_grayscale(img);
  const int w = gray.width();
  const int h = gray.height();
  RealField out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double centre = gray.at(x, y);
      const double sum = gray.at(x, clamp_index(y - 1, h)) + gray.at(x, clamp_index(y + 1, h)) +
                         gray.at(clamp_index(x - 1, w), y) + gray.at(clamp_index(x + 1, w), y) -
                         4.0 * centre;
      out.at(x, y) = std::abs(sum);
    }
  }
  return out;
}

Raster laplacian_edge(const Raster& img) { return imaging::quantize_minmax(laplacian_response(img)); }

Raster dispatch(const ToolCall& call, const Raster& img) {
  validate_arguments(call.tool, call.arguments);
  switch (call.tool) {
    case ToolId::ZoomIn: {
      const auto& b = call.arguments.at("bbox");
      return zoom_in(img, {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                           b[3].get<double>()});
    }
    case ToolId::LBP: return lbp_map(img);
    case ToolId::FFT: return fft_spectrum(img);
    case ToolId::Wavelet: return haar_wavelet(img);
    case ToolId::EdgeDetection: return laplacian_edge(img);
    case ToolId::HOG: return hog_render(img).rendering;
  }
  throw Error(Errc::InvalidTool, "unknown tool");
}

}  // namespace tarfas::vistools
