// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tarfas/imaging.hpp"

namespace tarfas::vistools {

using imaging::Raster;
using imaging::RealField;

/// The closed set of visual tools an agent may call.
enum class ToolId { ZoomIn, LBP, FFT, Wavelet, EdgeDetection, HOG };

inline constexpr std::size_t kToolCount = 6;
inline constexpr std::array<ToolId, kToolCount> kAllTools = {
    ToolId::ZoomIn, ToolId::LBP, ToolId::FFT, ToolId::Wavelet, ToolId::EdgeDetection, ToolId::HOG};

constexpr std::size_t index_of(ToolId id) noexcept { return static_cast<std::size_t>(id); }

/// Wire name used in tool-call payloads, e.g. "FFTTool".
std::string_view tool_name(ToolId id) noexcept;
std::optional<ToolId> parse_tool_name(std::string_view name) noexcept;

/// Normalized crop box. Boxes narrower than 8 px on a 224 px reference side are rejected.
struct BBox {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
};

inline constexpr int kReferenceSide = 224;
inline constexpr int kMinBoxPixels = 8;

/// Clamps to [0,1] and checks ordering and minimum extent; throws InvalidArgument.
BBox validate_bbox(BBox box);

struct ToolCall {
  ToolId tool = ToolId::ZoomIn;
  nlohmann::json arguments = nlohmann::json::object();

  friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

/// Schema check for a call's arguments: ZoomIn takes exactly {"bbox":[x0,y0,x1,y1]},
/// every other tool takes {}. Throws InvalidArgument.
void validate_arguments(ToolId tool, const nlohmann::json& arguments);

Raster zoom_in(const Raster& img, const BBox& box);

/// 8-neighbour radius-1 LBP, neighbour >= centre sets the bit, clockwise from
/// top-left with the top-left neighbour as MSB. One-pixel border is zero.
Raster lbp_map(const Raster& img);

/// Log-magnitude spectrum, centred, min-max rendered at the input's size.
Raster fft_spectrum(const Raster& img);
/// Unrendered log(1 + |F|) of the padded image after the quadrant swap.
RealField log_magnitude_spectrum(const Raster& img);

struct HaarBands {
  RealField ll, lh, hl, hh;
};

/// Single-level separable Haar with (a+b)/2 and (a-b)/2. Odd sides are padded by
/// replicating the last row/column. `lh` carries horizontal detail.
HaarBands haar_decompose(const Raster& img);
/// LL | LH over HL | HH, each band rendered independently, cropped to the input size.
Raster haar_wavelet(const Raster& img);

/// |4-neighbour Laplacian| with replicated borders, before rendering.
RealField laplacian_response(const Raster& img);
Raster laplacian_edge(const Raster& img);

struct HogResult {
  std::vector<double> features;
  Raster rendering;
};

inline constexpr int kHogCell = 8;
inline constexpr int kHogBins = 9;
inline constexpr int kHogBlock = 2;

/// 8x8 cells, 9 unsigned bins centred at 0, 20, ..., 160 degrees, 2x2 blocks with
/// stride 1, L2-Hys. Feature length is (cells_x - 1) * (cells_y - 1) * 36.
HogResult hog_render(const Raster& img);
/// Unnormalized per-cell histograms, cells_x * cells_y * 9 values, cell-major.
std::vector<double> hog_cell_histograms(const Raster& img, int& cells_x, int& cells_y);

/// Runs the named tool with validated arguments. HOG features are dropped.
Raster dispatch(const ToolCall& call, const Raster& img);

}  // namespace tarfas::vistools
