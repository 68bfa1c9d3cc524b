#include "ftvsr/dct.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ftvsr/ftt.hpp"
#include "ftvsr/keyvalue.hpp"

namespace ftvsr {

std::vector<double> dct_basis(std::size_t block) {
  if (block == 0) throw std::invalid_argument("dct_basis: block size must be positive");
  std::vector<double> basis(block * block);
  const double b = static_cast<double>(block);
  for (std::size_t u = 0; u < block; ++u) {
    const double c = u == 0 ? std::sqrt(1.0 / b) : std::sqrt(2.0 / b);
    for (std::size_t x = 0; x < block; ++x) {
      basis[u * block + x] = c * std::cos((2.0 * static_cast<double>(x) + 1.0) * static_cast<double>(u) *
                                          std::numbers::pi / (2.0 * b));
    }
  }
  return basis;
}

namespace {

void require_square(const Tensor& t, const char* op) {
  if (t.rank() != 2 || t.dim(0) != t.dim(1) || t.dim(0) == 0) {
    throw std::invalid_argument(std::string(op) + ": expected a non-empty square patch, got " +
                                shape_to_string(t.shape()));
  }
}

// Transforms one B x B block at the given strides. Forward: M P M^T; inverse: M^T D M.
void transform_block(const double* basis, std::size_t b, bool inverse, const double* src, std::size_t src_row,
                     std::size_t src_col, double* dst, std::size_t dst_row, std::size_t dst_col,
                     std::vector<double>& scratch, bool accumulate) {
  scratch.assign(b * b, 0.0);
  // scratch[r][y] = sum_x A[r][x] src[x][y], A = M (forward) or M^T (inverse)
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t x = 0; x < b; ++x) {
      const double a = inverse ? basis[x * b + r] : basis[r * b + x];
      const double* srow = src + x * src_row;
      for (std::size_t y = 0; y < b; ++y) scratch[r * b + y] += a * srow[y * src_col];
    }
  }
  // dst[r][s] = sum_y scratch[r][y] A[s][y]
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t s = 0; s < b; ++s) {
      double acc = 0.0;
      for (std::size_t y = 0; y < b; ++y) {
        const double a = inverse ? basis[y * b + s] : basis[s * b + y];
        acc += scratch[r * b + y] * a;
      }
      double& out = dst[r * dst_row + s * dst_col];
      out = accumulate ? out + acc : acc;
    }
  }
}

struct BlockGeometry {
  std::size_t frames, channels, rows, cols, block;
};

// Pixel layout [T][C][rows*B][cols*B] <-> spectral layout [T][B*B][C][rows][cols].
void run_block_transform(const BlockGeometry& g, bool to_frequency, const double* src, double* dst,
                         bool accumulate) {
  const auto basis = dct_basis(g.block);
  const std::size_t b = g.block, f_count = b * b;
  const std::size_t height = g.rows * b, width = g.cols * b;
  const std::size_t plane = g.rows * g.cols;
  std::vector<double> scratch;
  for (std::size_t t = 0; t < g.frames; ++t) {
    for (std::size_t c = 0; c < g.channels; ++c) {
      const std::size_t pixel_base = (t * g.channels + c) * height * width;
      for (std::size_t by = 0; by < g.rows; ++by) {
        for (std::size_t bx = 0; bx < g.cols; ++bx) {
          const std::size_t pixel_off = pixel_base + by * b * width + bx * b;
          const std::size_t spec_off = ((t * f_count) * g.channels + c) * plane + by * g.cols + bx;
          // frequency (u, v) lives at spec_off + (u * b + v) * channels * plane
          const std::size_t spec_row = b * g.channels * plane, spec_col = g.channels * plane;
          if (to_frequency) {
            transform_block(basis.data(), b, false, src + pixel_off, width, 1, dst + spec_off, spec_row, spec_col,
                            scratch, accumulate);
          } else {
            transform_block(basis.data(), b, true, src + spec_off, spec_row, spec_col, dst + pixel_off, width, 1,
                            scratch, accumulate);
          }
        }
      }
    }
  }
}

}  // namespace

Tensor dct2(const Tensor& patch) {
  require_square(patch, "dct2");
  const std::size_t b = patch.dim(0);
  const Tensor m = Tensor::from({b, b}, dct_basis(b));
  return matmul(matmul(m, patch), transpose(m));
}

Tensor idct2(const Tensor& coefficients) {
  require_square(coefficients, "idct2");
  const std::size_t b = coefficients.dim(0);
  const Tensor m = Tensor::from({b, b}, dct_basis(b));
  return matmul(matmul(transpose(m), coefficients), m);
}

Tensor block_dct(const Tensor& frames, std::size_t block) {
  if (frames.rank() != 4) throw std::invalid_argument("block_dct: expected [T x C x H x W], got " + shape_to_string(frames.shape()));
  if (block == 0) throw std::invalid_argument("block_dct: block size must be positive");
  const auto& s = frames.shape();
  if (s[2] % block != 0 || s[3] % block != 0) {
    throw std::invalid_argument("block_dct: frame extents " + shape_to_string(s) + " not multiples of block " +
                                std::to_string(block));
  }
  const BlockGeometry g{s[0], s[1], s[2] / block, s[3] / block, block};
  std::vector<double> out(frames.numel());
  run_block_transform(g, true, frames.data().data(), out.data(), false);
  auto px = frames.impl_ptr();
  return make_op_result("block_dct", {g.frames, block * block, g.channels, g.rows, g.cols}, std::move(out), {frames},
                        [px, g](std::span<const double> grad) {
                          run_block_transform(g, false, grad.data(), px->grad_buffer().data(), true);
                        });
}

Tensor block_idct(const Tensor& spectral, std::size_t block) {
  if (spectral.rank() != 5 || block == 0 || spectral.dim(1) != block * block) {
    throw std::invalid_argument("block_idct: expected [T x B^2 x C x rows x cols] for block " + std::to_string(block) +
                                ", got " + shape_to_string(spectral.shape()));
  }
  const auto& s = spectral.shape();
  const BlockGeometry g{s[0], s[2], s[3], s[4], block};
  std::vector<double> out(spectral.numel());
  run_block_transform(g, false, spectral.data().data(), out.data(), false);
  auto px = spectral.impl_ptr();
  return make_op_result("block_idct", {g.frames, g.channels, g.rows * block, g.cols * block}, std::move(out),
                        {spectral}, [px, g](std::span<const double> grad) {
                          run_block_transform(g, true, grad.data(), px->grad_buffer().data(), true);
                        });
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t extent) {
  if (extent == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (extent - 1));
  std::ptrdiff_t j = i % period;
  if (j < 0) j += period;
  if (j >= static_cast<std::ptrdiff_t>(extent)) j = period - j;
  return static_cast<std::size_t>(j);
}

Tensor reflect_pad(const Tensor& frames, std::size_t pad_bottom, std::size_t pad_right) {
  if (frames.rank() < 2) throw std::invalid_argument("reflect_pad: rank must be at least 2");
  if (pad_bottom == 0 && pad_right == 0) return frames;
  const auto& s = frames.shape();
  const std::size_t h = s[s.size() - 2], w = s[s.size() - 1];
  if (h == 0 || w == 0) throw std::invalid_argument("reflect_pad: empty frame");
  const std::size_t ph = h + pad_bottom, pw = w + pad_right;
  const std::size_t lead = frames.numel() / (h * w);
  std::vector<std::size_t> index(lead * ph * pw);
  for (std::size_t l = 0; l < lead; ++l)
    for (std::size_t y = 0; y < ph; ++y)
      for (std::size_t x = 0; x < pw; ++x)
        index[(l * ph + y) * pw + x] = (l * h + reflect_index(static_cast<std::ptrdiff_t>(y), h)) * w +
                                       reflect_index(static_cast<std::ptrdiff_t>(x), w);
  Shape out_shape = s;
  out_shape[s.size() - 2] = ph;
  out_shape[s.size() - 1] = pw;
  return gather(frames, std::move(index), std::move(out_shape));
}

SpectralMap to_spectral(const Tensor& frames, std::size_t block, std::size_t pad_multiple) {
  if (frames.rank() != 4) throw std::invalid_argument("to_spectral: expected [T x C x H x W], got " + shape_to_string(frames.shape()));
  if (frames.numel() == 0) throw std::invalid_argument("to_spectral: empty input");
  if (block == 0) throw std::invalid_argument("to_spectral: block size must be positive");
  if (pad_multiple == 0) pad_multiple = block;
  if (pad_multiple % block != 0) throw std::invalid_argument("to_spectral: pad multiple must be a multiple of the block size");
  SpectralMap map;
  map.block = block;
  map.height = frames.dim(2);
  map.width = frames.dim(3);
  map.padded_height = (map.height + pad_multiple - 1) / pad_multiple * pad_multiple;
  map.padded_width = (map.width + pad_multiple - 1) / pad_multiple * pad_multiple;
  map.data = block_dct(reflect_pad(frames, map.padded_height - map.height, map.padded_width - map.width), block);
  return map;
}

Tensor from_spectral(const SpectralMap& map) {
  Tensor pixels = block_idct(map.data, map.block);
  if (pixels.dim(2) != map.padded_height || pixels.dim(3) != map.padded_width)
    throw std::invalid_argument("from_spectral: map geometry does not match its data");
  if (map.padded_height != map.height) pixels = slice(pixels, 2, 0, map.height);
  if (map.padded_width != map.width) pixels = slice(pixels, 3, 0, map.width);
  return pixels;
}

namespace {

std::filesystem::path sidecar_path(const std::filesystem::path& ftt_path) {
  auto p = ftt_path;
  p += ".txt";
  return p;
}

}  // namespace

void write_spectral(const std::filesystem::path& ftt_path, const SpectralMap& map) {
  write_ftt(ftt_path, map.data);
  write_key_values(sidecar_path(ftt_path), {{"block_size", std::to_string(map.block)},
                                            {"height", std::to_string(map.height)},
                                            {"width", std::to_string(map.width)},
                                            {"padded_height", std::to_string(map.padded_height)},
                                            {"padded_width", std::to_string(map.padded_width)}});
}

SpectralMap read_spectral(const std::filesystem::path& ftt_path) {
  const auto header = read_key_values(sidecar_path(ftt_path));
  SpectralMap map;
  map.data = read_ftt(ftt_path);
  map.block = require_size(header, "block_size");
  map.height = require_size(header, "height");
  map.width = require_size(header, "width");
  map.padded_height = require_size(header, "padded_height");
  map.padded_width = require_size(header, "padded_width");
  if (map.data.rank() != 5 || map.data.dim(1) != map.block * map.block ||
      map.data.dim(3) * map.block != map.padded_height || map.data.dim(4) * map.block != map.padded_width)
    throw std::runtime_error("spectral sidecar does not match tensor " + shape_to_string(map.data.shape()));
  return map;
}

}  // namespace ftvsr
