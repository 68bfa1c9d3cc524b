#include "ftvsr/ftt.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ftvsr {

static_assert(std::endian::native == std::endian::little, "FTT I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'F', 'T', 'T', '1'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw std::runtime_error("FTT: truncated stream");
  return value;
}

}  // namespace

void write_ftt(std::ostream& out, const Tensor& tensor, FttDtype dtype) {
  out.write(kMagic, 4);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  if (tensor.rank() > 255) throw std::invalid_argument("FTT: rank exceeds 255");
  put<std::uint8_t>(out, static_cast<std::uint8_t>(tensor.rank()));
  for (auto extent : tensor.shape()) put<std::uint64_t>(out, extent);
  if (dtype == FttDtype::kF64) {
    out.write(reinterpret_cast<const char*>(tensor.data().data()),
              static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
  } else {
    for (double v : tensor.data()) put<float>(out, static_cast<float>(v));
  }
  if (!out) throw std::runtime_error("FTT: write failed");
}

void write_ftt(const std::filesystem::path& path, const Tensor& tensor, FttDtype dtype) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("FTT: cannot open " + path.string() + " for writing");
  write_ftt(out, tensor, dtype);
}

Tensor read_ftt(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("FTT: bad magic");
  const auto dtype = take<std::uint8_t>(in);
  if (dtype > 1) throw std::runtime_error("FTT: unknown dtype tag " + std::to_string(dtype));
  const auto rank = take<std::uint8_t>(in);
  Shape shape(rank);
  for (auto& extent : shape) extent = static_cast<std::size_t>(take<std::uint64_t>(in));
  std::vector<double> values(shape_numel(shape));
  if (dtype == 0) {
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double))))
      throw std::runtime_error("FTT: truncated payload");
  } else {
    for (auto& v : values) v = take<float>(in);
  }
  return Tensor::from(std::move(shape), std::move(values));
}

Tensor read_ftt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("FTT: cannot open " + path.string());
  return read_ftt(in);
}

void write_tensor_dir(const std::filesystem::path& dir, const NamedTensors& tensors) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw std::runtime_error("cannot write manifest in " + dir.string());
  for (const auto& [name, tensor] : tensors) {
    if (name.empty() || name.find_first_of(" \t\n/") != std::string::npos)
      throw std::invalid_argument("tensor name not usable as a file name: '" + name + "'");
    const std::string file = name + ".ftt";
    write_ftt(dir / file, tensor);
    manifest << name << ' ' << file << '\n';
  }
}

NamedTensors read_tensor_dir(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw std::runtime_error("missing manifest.txt in " + dir.string());
  NamedTensors out;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string name, file;
    if (!(fields >> name >> file)) throw std::runtime_error("malformed manifest line: " + line);
    out.emplace_back(name, read_ftt(dir / file));
  }
  return out;
}

}  // namespace ftvsr
