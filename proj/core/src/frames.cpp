#include "ftvsr/frames.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace ftvsr {

namespace {

std::string next_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

}  // namespace

Tensor read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open frame " + path.string());
  const std::string magic = next_token(in);
  std::size_t channels = 0;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    throw std::runtime_error(path.string() + ": not a binary PPM/PGM (magic '" + magic + "')");
  }
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(next_token(in));
    h = std::stoul(next_token(in));
    maxval = std::stoul(next_token(in));
  } catch (const std::exception&) {
    throw std::runtime_error(path.string() + ": malformed header");
  }
  if (maxval != 255) throw std::runtime_error(path.string() + ": only 8-bit frames are supported");
  if (w == 0 || h == 0) throw std::runtime_error(path.string() + ": empty frame");
  std::vector<unsigned char> bytes(w * h * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw std::runtime_error(path.string() + ": truncated pixel data");
  std::vector<double> v(bytes.size());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < channels; ++c) v[(c * h + y) * w + x] = bytes[(y * w + x) * channels + c] / 255.0;
  return Tensor::from({channels, h, w}, std::move(v));
}

void write_pnm(const std::filesystem::path& path, const Tensor& frame) {
  if (frame.rank() != 3 || (frame.dim(0) != 1 && frame.dim(0) != 3))
    throw std::invalid_argument("write_pnm: expected [1 or 3 x H x W], got " + shape_to_string(frame.shape()));
  const std::size_t c = frame.dim(0), h = frame.dim(1), w = frame.dim(2);
  const auto src = frame.data();
  std::vector<unsigned char> bytes(c * h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t k = 0; k < c; ++k) {
        const double v = std::clamp(src[(k * h + y) * w + x], 0.0, 1.0);
        bytes[(y * w + x) * c + k] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write frame " + path.string());
  out << (c == 3 ? "P6" : "P5") << '\n' << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Tensor read_frame_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("frame directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".ppm" || ext == ".pgm")) files.push_back(e.path());
  }
  if (files.empty()) throw std::runtime_error("no PPM/PGM frames in " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<Tensor> frames;
  Shape first;
  for (const auto& f : files) {
    Tensor t = read_pnm(f);
    if (frames.empty()) first = t.shape();
    if (t.shape() != first)
      throw std::runtime_error("frame " + f.string() + " has size " + shape_to_string(t.shape()) + ", expected " +
                               shape_to_string(first));
    const auto& s = t.shape();
    frames.push_back(reshape(t, {1, s[0], s[1], s[2]}));
  }
  return concat(frames, 0);
}

void write_frame_dir(const std::filesystem::path& dir, const Tensor& frames) {
  if (frames.rank() != 4) throw std::invalid_argument("write_frame_dir: expected [T x C x H x W]");
  std::filesystem::create_directories(dir);
  const auto& s = frames.shape();
  for (std::size_t t = 0; t < s[0]; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "%08zu.%s", t, s[1] == 3 ? "ppm" : "pgm");
    write_pnm(dir / name, reshape(slice(frames.detach(), 0, t, 1), {s[1], s[2], s[3]}));
  }
}

Tensor synthetic_clip(std::uint64_t seed, std::size_t frames, std::size_t channels, std::size_t height,
                      std::size_t width) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double pi = std::numbers::pi;

  struct Grating {
    double kx, ky, phase, amp;
    std::vector<double> tint;
  };
  struct Shape2 {
    double cx, cy, radius, softness, amp;
    bool square;
    std::vector<double> tint;
  };
  auto tint = [&] {
    std::vector<double> t(channels);
    for (auto& v : t) v = 0.5 + 0.5 * unit(rng);
    return t;
  };
  std::vector<Grating> gratings(3);
  for (auto& g : gratings) {
    const double angle = pi * unit(rng);
    const double period = 3.0 + 9.0 * unit(rng);
    g = {std::cos(angle) * 2 * pi / period, std::sin(angle) * 2 * pi / period, 2 * pi * unit(rng),
         0.08 + 0.1 * unit(rng), tint()};
  }
  std::vector<Shape2> shapes(4);
  for (auto& s : shapes) {
    s = {unit(rng) * static_cast<double>(width), unit(rng) * static_cast<double>(height),
         2.0 + 0.25 * static_cast<double>(std::min(height, width)) * unit(rng), 0.3 + 0.7 * unit(rng),
         (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.15 + 0.2 * unit(rng)), unit(rng) < 0.5, tint()};
  }
  const double vx = 2.0 * unit(rng) - 1.0, vy = 2.0 * unit(rng) - 1.0;
  std::vector<double> base(channels);
  for (auto& b : base) b = 0.3 + 0.4 * unit(rng);

  std::vector<double> out(frames * channels * height * width);
  for (std::size_t t = 0; t < frames; ++t) {
    const double ox = vx * static_cast<double>(t), oy = vy * static_cast<double>(t);
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        const double px = static_cast<double>(x) + 0.5 - ox, py = static_cast<double>(y) + 0.5 - oy;
        for (std::size_t c = 0; c < channels; ++c) {
          double v = base[c];
          for (const auto& g : gratings) v += g.amp * g.tint[c] * std::sin(g.kx * px + g.ky * py + g.phase);
          for (const auto& s : shapes) {
            const double dx = px - s.cx, dy = py - s.cy;
            const double dist = s.square ? std::max(std::abs(dx), std::abs(dy)) : std::hypot(dx, dy);
            const double inside = 1.0 / (1.0 + std::exp((dist - s.radius) / s.softness));
            v += s.amp * s.tint[c] * inside;
          }
          out[((t * channels + c) * height + y) * width + x] = std::clamp(v, 0.0, 1.0);
        }
      }
  }
  return Tensor::from({frames, channels, height, width}, std::move(out));
}

}  // namespace ftvsr
