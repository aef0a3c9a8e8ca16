// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <vector>

#include "tarfas/imaging.hpp"

namespace tarfas::spectral {

using Complex = std::complex<double>;

/// Dense complex grid, row-major. Both sides must be powers of two for the transforms.
struct ComplexField {
  int width = 0;
  int height = 0;
  std::vector<Complex> values;

  ComplexField() = default;
  ComplexField(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h) {}

  Complex at(int x, int y) const noexcept { return values[static_cast<std::size_t>(y) * width + x]; }
  Complex& at(int x, int y) noexcept { return values[static_cast<std::size_t>(y) * width + x]; }
};

bool is_power_of_two(int n) noexcept;
int next_power_of_two(int n) noexcept;

/// In-place iterative radix-2 transform. Forward is unnormalized; inverse divides by n.
void fft_1d(std::vector<Complex>& data, bool inverse);

/// Separable 2-D transform (rows then columns), same normalization as fft_1d.
void fft_2d(ComplexField& field, bool inverse);

/// Copies `field` into the top-left corner of a zero grid whose sides are powers of two.
ComplexField zero_pad_pow2(const imaging::RealField& field);

/// Swaps quadrants so the zero-frequency term lands at (width/2, height/2).
imaging::RealField fftshift(const imaging::RealField& field);

}  // namespace tarfas::spectral
