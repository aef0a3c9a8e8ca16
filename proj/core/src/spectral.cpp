// SPDX-License-Identifier: Apache-2.0
#include "tarfas/spectral.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "tarfas/error.hpp"

namespace tarfas::spectral {

bool is_power_of_two(int n) noexcept { return n > 0 && (n & (n - 1)) == 0; }

int next_power_of_two(int n) noexcept {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_1d(std::vector<Complex>& data, bool inverse) {
  const std::size_t n = data.size();
  if (n <= 1) return;
  if (!is_power_of_two(static_cast<int>(n))) {
    throw Error(Errc::InvalidArgument, "fft length must be a power of two");
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    // Twiddles computed directly per index; the recurrence drifts on long transforms.
    std::vector<Complex> twiddle(half);
    for (std::size_t k = 0; k < half; ++k) {
      twiddle[k] = std::polar(1.0, angle * static_cast<double>(k));
    }
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex u = data[start + k];
        const Complex v = data[start + k + half] * twiddle[k];
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& z : data) z *= scale;
  }
}

void fft_2d(ComplexField& field, bool inverse) {
  if (!is_power_of_two(field.width) || !is_power_of_two(field.height)) {
    throw Error(Errc::InvalidArgument, "fft_2d requires power-of-two sides");
  }
  std::vector<Complex> line(static_cast<std::size_t>(field.width));
  for (int y = 0; y < field.height; ++y) {
    for (int x = 0; x < field.width; ++x) line[x] = field.at(x, y);
    fft_1d(line, inverse);
    for (int x = 0; x < field.width; ++x) field.at(x, y) = line[x];
  }
  line.resize(static_cast<std::size_t>(field.height));
  for (int x = 0; x < field.width; ++x) {
    for (int y = 0; y < field.height; ++y) line[y] = field.at(x, y);
    fft_1d(line, inverse);
    for (int y = 0; y < field.height; ++y) field.at(x, y) = line[y];
  }
}

ComplexField zero_pad_pow2(const imaging::RealField& field) {
  ComplexField out(next_power_of_two(field.width), next_power_of_two(field.height));
  for (int y = 0; y < field.height; ++y) {
    for (int x = 0; x < field.width; ++x) out.at(x, y) = field.at(x, y);
  }
  return out;
}

imaging::RealField fftshift(const imaging::RealField& field) {
  imaging::RealField out(field.width, field.height);
  const int sx = field.width / 2;
  const int sy = field.height / 2;
  for (int y = 0; y < field.height; ++y) {
    for (int x = 0; x < field.width; ++x) {
      out.at((x + sx) % field.width, (y + sy) % field.height) = field.at(x, y);
    }
  }
  return out;
}

}  // namespace tarfas::spectral
