// SPDX-License-Identifier: Apache-2.0
#include "tarfas/imaging.hpp"

#include <png.h>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <memory>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tarfas/error.hpp"

namespace tarfas::imaging {

Raster::Raster(int width, int height, int channels)
    : Raster(width, height, channels,
             std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                       std::max(height, 0) * std::max(channels, 0))) {}

Raster::Raster(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width < 1 || height < 1) {
    throw Error(Errc::InvalidArgument, "raster extent must be at least 1x1");
  }
  if (channels != 1 && channels != 3) {
    throw Error(Errc::InvalidArgument, "raster channels must be 1 or 3");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw Error(Errc::InvalidArgument, "raster data length does not match width*height*channels");
  }
}

namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

struct MemoryReader {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t len) {
  auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (reader->offset + len > reader->bytes.size()) {
    png_error(png, "truncated PNG stream");
  }
  std::memcpy(out, reader->bytes.data() + reader->offset, len);
  reader->offset += len;
}

void png_on_error(png_structp png, png_const_charp msg) {
  auto* message = static_cast<std::string*>(png_get_error_ptr(png));
  if (message != nullptr) *message = msg;
  png_longjmp(png, 1);
}

void png_on_warning(png_structp, png_const_charp) {}

// libpng reports errors through longjmp, so nothing with a destructor may be
// live between setjmp and the decode finishing. Output goes to caller-owned storage.
bool decode_png_raw(std::span<const std::uint8_t> bytes, std::vector<std::uint8_t>& pixels,
                    int& width, int& height, int& channels, std::string& message) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_on_error,
                                           png_on_warning);
  if (png == nullptr) {
    message = "png_create_read_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    message = "png_create_info_struct failed";
    return false;
  }
  MemoryReader reader{bytes, 0};
  std::vector<png_bytep>* rows = new std::vector<png_bytep>();
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    delete rows;
    return false;
  }
  png_set_read_fn(png, &reader, png_read_from_memory);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  channels = static_cast<int>(png_get_channels(png, info));
  if (channels != 1 && channels != 3) {
    png_error(png, "unsupported channel layout");
  }
  pixels.resize(static_cast<std::size_t>(width) * height * channels);
  rows->resize(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    (*rows)[y] = pixels.data() + static_cast<std::size_t>(y) * width * channels;
  }
  png_read_image(png, rows->data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  delete rows;
  return true;
}

Raster decode_png(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> pixels;
  int width = 0, height = 0, channels = 0;
  std::string message;
  if (!decode_png_raw(bytes, pixels, width, height, channels, message)) {
    throw Error(Errc::Decode, "PNG decode failed: " + message);
  }
  return Raster(width, height, channels, std::move(pixels));
}

// Netpbm header tokens: whitespace separated, '#' comments to end of line.
class PnmHeader {
 public:
  explicit PnmHeader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  long next_int() {
    skip_space_and_comments();
    long value = 0;
    int digits = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw Error(Errc::Decode, "PPM header value out of range");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw Error(Errc::Decode, "malformed PPM header");
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error(Errc::Decode, "malformed PPM header terminator");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

Raster decode_pnm(std::span<const std::uint8_t> bytes) {
  const int channels = bytes[1] == '6' ? 3 : 1;
  PnmHeader header(bytes);
  const long width = header.next_int();
  const long height = header.next_int();
  const long maxval = header.next_int();
  if (width < 1 || height < 1) throw Error(Errc::Decode, "PPM has empty extent");
  if (maxval < 1 || maxval > 65535) throw Error(Errc::Decode, "PPM maxval out of range");
  const std::size_t offset = header.raster_offset();
  const std::size_t samples = static_cast<std::size_t>(width) * height * channels;
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  if (bytes.size() < offset + samples * sample_bytes) {
    throw Error(Errc::Decode, "PPM raster truncated");
  }
  std::vector<std::uint8_t> pixels(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    long v = 0;
    if (sample_bytes == 2) {
      v = (bytes[offset + 2 * i] << 8) | bytes[offset + 2 * i + 1];
    } else {
      v = bytes[offset + i];
    }
    if (v > maxval) throw Error(Errc::Decode, "PPM sample exceeds maxval");
    if (maxval == 255) {
      pixels[i] = static_cast<std::uint8_t>(v);
    } else if (maxval == 65535) {
      pixels[i] = static_cast<std::uint8_t>(v >> 8);
    } else {
      pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * v / maxval));
    }
  }
  return Raster(static_cast<int>(width), static_cast<int>(height), channels, std::move(pixels));
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_flush_noop(png_structp) {}

bool encode_png_raw(const Raster& img, std::vector<std::uint8_t>& out, std::string& message) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_on_error,
                                            png_on_warning);
  if (png == nullptr) {
    message = "png_create_write_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    message = "png_create_info_struct failed";
    return false;
  }
  std::vector<png_bytep>* rows = new std::vector<png_bytep>(static_cast<std::size_t>(img.height()));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    delete rows;
    return false;
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8,
               img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width()) * img.channels();
  auto* base = const_cast<std::uint8_t*>(img.data().data());
  for (int y = 0; y < img.height(); ++y) (*rows)[y] = base + y * stride;
  png_write_image(png, rows->data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  delete rows;
  return true;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open image '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::Io, "read failed for '" + path.string() + "'");
  return bytes;
}

}  // namespace

Raster decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= kPngSignature.size() &&
      std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin())) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes);
  }
  throw Error(Errc::Decode, "unsupported image format (expected PNG or binary PPM/PGM)");
}

Raster load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_image(bytes);
}

std::vector<std::uint8_t> encode_png(const Raster& img) {
  if (img.empty()) throw Error(Errc::InvalidArgument, "cannot encode an empty raster");
  std::vector<std::uint8_t> out;
  std::string message;
  if (!encode_png_raw(img, out, message)) {
    throw Error(Errc::Io, "PNG encode failed: " + message);
  }
  return out;
}

void encode_png(const Raster& img, const std::filesystem::path& path) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw Error(Errc::Io, "write failed for '" + path.string() + "'");
}

Raster resize_bilinear(const Raster& img, int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(Errc::InvalidArgument, "resize target must be at least 1x1");
  }
  if (width == img.width() && height == img.height()) return img;

  const int channels = img.channels();
  const double scale_x = static_cast<double>(img.width()) / width;
  const double scale_y = static_cast<double>(img.height()) / height;

  struct Tap {
    int lo, hi;
    double frac;
  };
  auto taps = [](int dst_len, int src_len, double scale) {
    std::vector<Tap> out(static_cast<std::size_t>(dst_len));
    for (int d = 0; d < dst_len; ++d) {
      double s = (d + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(src_len - 1));
      const int lo = static_cast<int>(std::floor(s));
      out[d] = {lo, std::min(lo + 1, src_len - 1), s - lo};
    }
    return out;
  };
  const auto xs = taps(width, img.width(), scale_x);
  const auto ys = taps(height, img.height(), scale_y);

  Raster out(width, height, channels);
  for (int y = 0; y < height; ++y) {
    const Tap& ty = ys[y];
    for (int x = 0; x < width; ++x) {
      const Tap& tx = xs[x];
      for (int c = 0; c < channels; ++c) {
        const double top = img.at(tx.lo, ty.lo, c) * (1.0 - tx.frac) + img.at(tx.hi, ty.lo, c) * tx.frac;
        const double bottom =
            img.at(tx.lo, ty.hi, c) * (1.0 - tx.frac) + img.at(tx.hi, ty.hi, c) * tx.frac;
        const double v = top * (1.0 - ty.frac) + bottom * ty.frac;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

Raster to_grayscale(const Raster& img) {
  if (img.channels() == 1) return img;
  Raster out(img.width(), img.height(), 1);
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double y = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
  }
  return out;
}

RealField to_field(const Raster& gray) {
  if (gray.channels() != 1) throw Error(Errc::InvalidArgument, "to_field expects a gray raster");
  RealField field(gray.width(), gray.height());
  std::copy(gray.data().begin(), gray.data().end(), field.values.begin());
  return field;
}

Raster quantize_minmax(const RealField& field) {
  if (field.width < 1 || field.height < 1 ||
      field.values.size() != static_cast<std::size_t>(field.width) * field.height) {
    throw Error(Errc::InvalidArgument, "malformed real field");
  }
  double lo = field.values.front();
  double hi = lo;
  for (double v : field.values) {
    if (!std::isfinite(v)) throw Error(Errc::NonFinite, "field contains NaN or Inf");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Raster out(field.width, field.height, 1);
  if (hi == lo) return out;
  const double span = hi - lo;
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<std::uint8_t>(std::lround(255.0 * (field.values[i] - lo) / span));
  }
  return out;
}

std::string raster_digest(const Raster& img) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::Io, "SHA-256 unavailable");
  }
  const std::array<std::int32_t, 3> dims = {img.width(), img.height(), img.channels()};
  for (std::int32_t d : dims) {
    const std::array<std::uint8_t, 4> le = {
        static_cast<std::uint8_t>(d), static_cast<std::uint8_t>(d >> 8),
        static_cast<std::uint8_t>(d >> 16), static_cast<std::uint8_t>(d >> 24)};
    EVP_DigestUpdate(ctx.get(), le.data(), le.size());
  }
  EVP_DigestUpdate(ctx.get(), img.data().data(), img.data().size());
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    const unsigned char b = digest[i];
    hex.push_back(kHex[b >> 4]);
    hex.push_back(kHex[b & 0xf]);
  }
  return hex;
}

}  // namespace tarfas::imaging
