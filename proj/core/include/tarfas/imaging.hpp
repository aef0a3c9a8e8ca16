// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tarfas::imaging {

/// Decoded 8-bit image, row-major, interleaved channels (1 = gray, 3 = RGB).
class Raster {
 public:
  Raster() = default;
  /// Zero-filled raster. Throws InvalidArgument on empty extent or bad channel count.
  Raster(int width, int height, int channels);
  Raster(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  std::uint8_t at(int x, int y, int c = 0) const noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single-channel real-valued grid used as an intermediate before quantization.
struct RealField {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  RealField() = default;
  RealField(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double at(int x, int y) const noexcept { return values[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) noexcept { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Decodes PNG (8 or 16 bit; 16-bit keeps the high byte) or binary PPM/PGM (P6/P5).
/// Alpha is dropped; palette and gray+alpha images are expanded.
Raster load_image(const std::filesystem::path& path);
Raster decode_image(std::span<const std::uint8_t> bytes);

void encode_png(const Raster& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const Raster& img);

/// Half-pixel-centered bilinear resize with border clamping.
Raster resize_bilinear(const Raster& img, int width, int height);

/// BT.601 luma; single-channel input is returned unchanged.
Raster to_grayscale(const Raster& img);

/// Lifts a single-channel raster into a RealField.
RealField to_field(const Raster& gray);

/// Linear min-max mapping to 0..255. A constant field renders all-zero.
Raster quantize_minmax(const RealField& field);

/// Hex SHA-256 over (width, height, channels, pixels); stable provenance key for renders.
std::string raster_digest(const Raster& img);

}  // namespace tarfas::imaging
