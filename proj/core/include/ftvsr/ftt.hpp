#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ftvsr/tensor.hpp"

namespace ftvsr {

// FTT1 binary tensor file:
//   "FTT1" | u8 dtype (0 = f64, 1 = f32) | u8 rank | rank x u64 LE extents | LE scalars
enum class FttDtype : std::uint8_t { kF64 = 0, kF32 = 1 };

void write_ftt(std::ostream& out, const Tensor& tensor, FttDtype dtype = FttDtype::kF64);
void write_ftt(const std::filesystem::path& path, const Tensor& tensor, FttDtype dtype = FttDtype::kF64);
Tensor read_ftt(std::istream& in);
Tensor read_ftt(const std::filesystem::path& path);

// Directory of FTT files plus `manifest.txt` with one "name file" pair per line.
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;
void write_tensor_dir(const std::filesystem::path& dir, const NamedTensors& tensors);
NamedTensors read_tensor_dir(const std::filesystem::path& dir);

}  // namespace ftvsr
