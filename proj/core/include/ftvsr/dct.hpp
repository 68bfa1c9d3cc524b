#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "ftvsr/tensor.hpp"

namespace ftvsr {

// Orthonormal DCT-II basis, row-major [u * block + x]:
//   c(u) * cos((2x + 1) u pi / (2 block)),  c(0) = sqrt(1/block), c(u) = sqrt(2/block).
std::vector<double> dct_basis(std::size_t block);

// 2D transform of one square patch; differentiable.
Tensor dct2(const Tensor& patch);
Tensor idct2(const Tensor& coefficients);

// Per-channel block transform of frames [T x C x H x W] with H, W multiples of
// `block`. Output is [T x F x C x H/block x W/block], F = block^2, with
// frequency index f = u * block + v (row-major, no zigzag).
Tensor block_dct(const Tensor& frames, std::size_t block);
Tensor block_idct(const Tensor& spectral, std::size_t block);

// Reflective padding at the bottom and right edges of the last two axes.
Tensor reflect_pad(const Tensor& frames, std::size_t pad_bottom, std::size_t pad_right);
std::size_t reflect_index(std::ptrdiff_t i, std::size_t extent);

struct SpectralMap {
  Tensor data;  // [T x F x C x padded_height/block x padded_width/block]
  std::size_t block = 0;
  std::size_t height = 0;  // source frame extents before padding
  std::size_t width = 0;
  std::size_t padded_height = 0;
  std::size_t padded_width = 0;

  std::size_t frames() const { return data.dim(0); }
  std::size_t frequencies() const { return data.dim(1); }
  std::size_t channels() const { return data.dim(2); }
  std::size_t rows() const { return data.dim(3); }
  std::size_t cols() const { return data.dim(4); }
};

// `pad_multiple` is the pixel alignment enforced by padding; 0 means `block`.
// It must be a multiple of `block`.
SpectralMap to_spectral(const Tensor& frames, std::size_t block, std::size_t pad_multiple = 0);
Tensor from_spectral(const SpectralMap& map);

// FTT tensor plus a key=value sidecar with the geometry.
void write_spectral(const std::filesystem::path& ftt_path, const SpectralMap& map);
SpectralMap read_spectral(const std::filesystem::path& ftt_path);

}  // namespace ftvsr
