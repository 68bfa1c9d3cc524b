#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ftvsr/tensor.hpp"

namespace ftvsr {

// Binary PPM (P6) or PGM (P5), 8-bit. Returns [C x H x W] in [0, 1], C = 3 or 1.
Tensor read_pnm(const std::filesystem::path& path);
// Writes P6 for 3 channels and P5 for 1, rounding clipped values to 8 bits.
void write_pnm(const std::filesystem::path& path, const Tensor& frame);

// All *.ppm / *.pgm files of a directory in name order, as [T x C x H x W].
// Frames must share one size.
Tensor read_frame_dir(const std::filesystem::path& dir);
// Writes frames as 00000000.ppm, 00000001.ppm, ...
void write_frame_dir(const std::filesystem::path& dir, const Tensor& frames);

// Procedural moving texture clip [frames x channels x height x width] in
// [0, 1]: oriented gratings and soft-edged shapes drifting at a per-clip
// sub-pixel velocity.
Tensor synthetic_clip(std::uint64_t seed, std::size_t frames, std::size_t channels, std::size_t height,
                      std::size_t width);

}  // namespace ftvsr
