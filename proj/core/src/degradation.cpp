#include "ftvsr/degradation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include "ftvsr/dct.hpp"
#include "ftvsr/imaging.hpp"

namespace ftvsr {

namespace {

// JPEG luminance table at quality 50, row u, column v.
constexpr std::array<std::array<double, 8>, 8> kLumaTable = {{
    {16, 11, 10, 16, 24, 40, 51, 61},
    {12, 12, 14, 19, 26, 58, 60, 55},
    {14, 13, 16, 24, 40, 57, 69, 56},
    {14, 17, 22, 29, 51, 87, 80, 62},
    {18, 22, 37, 56, 68, 109, 103, 77},
    {24, 35, 55, 64, 81, 104, 113, 92},
    {49, 64, 78, 87, 103, 121, 120, 101},
    {72, 92, 95, 98, 112, 100, 103, 99},
}};

// Views any tensor with rank >= 2 as [planes x 1 x H x W].
Tensor as_planes(const Tensor& frames) {
  if (frames.rank() < 2) throw std::invalid_argument("expected at least two axes, got " + shape_to_string(frames.shape()));
  const std::size_t h = frames.dim(frames.rank() - 2), w = frames.dim(frames.rank() - 1);
  if (h == 0 || w == 0) throw std::invalid_argument("empty frame");
  return reshape(frames, {frames.numel() / (h * w), 1, h, w});
}

void require_frames(const Tensor& hr) {
  if (hr.rank() != 4 || hr.numel() == 0)
    throw std::invalid_argument("degrade: expected non-empty [T x C x H x W], got " + shape_to_string(hr.shape()));
}

}  // namespace

void DegradationSpec::validate() const {
  if (scale == 0) throw std::invalid_argument("degradation: scale must be at least 1");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("degradation: noise sigma must be non-negative");
  if (!(compression_q >= 0.0)) throw std::invalid_argument("degradation: compression q must be non-negative");
  if (!(blur_sigma >= 0.0)) throw std::invalid_argument("degradation: blur sigma must be non-negative");
  if (blur_sigma > 0.0 && blur_size % 2 == 0) throw std::invalid_argument("degradation: blur size must be odd");
}

std::string downsample_name(DownsampleMode mode) { return mode == DownsampleMode::kBicubic ? "bi" : "bd"; }

DownsampleMode parse_downsample(const std::string& name) {
  if (name == "bi") return DownsampleMode::kBicubic;
  if (name == "bd") return DownsampleMode::kBlurStride;
  throw std::invalid_argument("unknown downsampling mode '" + name + "' (expected bi or bd)");
}

KeyValues DegradationSpec::to_key_values() const {
  return {{"blur_sigma", format_double(blur_sigma)},
          {"blur_size", std::to_string(blur_size)},
          {"scale", std::to_string(scale)},
          {"downsample", downsample_name(downsample)},
          {"noise_sigma", format_double(noise_sigma)},
          {"compression_q", format_double(compression_q)}};
}

DegradationSpec DegradationSpec::from_key_values(const std::map<std::string, std::string>& values) {
  DegradationSpec s;
  s.blur_sigma = require_double(values, "blur_sigma");
  s.blur_size = require_size(values, "blur_size");
  s.scale = require_size(values, "scale");
  s.downsample = parse_downsample(require_key(values, "downsample"));
  s.noise_sigma = require_double(values, "noise_sigma");
  s.compression_q = require_double(values, "compression_q");
  s.validate();
  return s;
}

std::vector<double> gaussian_kernel(double sigma, std::size_t size) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
  if (size % 2 == 0) throw std::invalid_argument("gaussian_kernel: size must be odd");
  std::vector<double> k(size);
  const double centre = static_cast<double>(size / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double x = static_cast<double>(i) - centre;
    k[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    total += k[i];
  }
  for (auto& v : k) v /= total;
  return k;
}

Tensor gaussian_blur(const Tensor& frames, double sigma, std::size_t size) {
  const Tensor planes = as_planes(frames);
  const auto kernel = gaussian_kernel(sigma, size);
  const std::size_t n = planes.dim(0), h = planes.dim(2), w = planes.dim(3);
  const auto r = static_cast<std::ptrdiff_t>(size / 2);
  const auto src = planes.data();
  std::vector<double> tmp(src.size()), out(src.size());
  for (std::size_t p = 0; p < n; ++p) {
    const double* in = src.data() + p * h * w;
    double* mid = tmp.data() + p * h * w;
    double* dst = out.data() + p * h * w;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t j = -r; j <= r; ++j)
          acc += kernel[j + r] * in[y * w + reflect_index(static_cast<std::ptrdiff_t>(x) + j, w)];
        mid[y * w + x] = acc;
      }
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t j = -r; j <= r; ++j)
          acc += kernel[j + r] * mid[reflect_index(static_cast<std::ptrdiff_t>(y) + j, h) * w + x];
        dst[y * w + x] = acc;
      }
  }
  return Tensor::from(frames.shape(), std::move(out));
}

namespace {

Tensor stride_sample(const Tensor& frames, std::size_t s) {
  const std::size_t t = frames.dim(0), c = frames.dim(1), h = frames.dim(2), w = frames.dim(3);
  const std::size_t oh = h / s, ow = w / s;
  const auto src = frames.data();
  std::vector<double> out(t * c * oh * ow);
  for (std::size_t p = 0; p < t * c; ++p)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) out[(p * oh + y) * ow + x] = src[(p * h + y * s) * w + x * s];
  return Tensor::from({t, c, oh, ow}, std::move(out));
}

}  // namespace

Tensor degrade(const Tensor& hr, const DegradationSpec& spec, std::uint64_t seed) {
  spec.validate();
  require_frames(hr);
  const std::size_t s = spec.scale;
  if (hr.dim(2) % s != 0 || hr.dim(3) % s != 0)
    throw std::invalid_argument("degrade: frame size " + std::to_string(hr.dim(2)) + "x" + std::to_string(hr.dim(3)) +
                                " is not divisible by scale " + std::to_string(s));
  NoGradGuard no_grad;
  Tensor x = hr.detach();
  if (spec.blur_sigma > 0.0) x = gaussian_blur(x, spec.blur_sigma, spec.blur_size);
  if (s > 1) {
    if (spec.downsample == DownsampleMode::kBicubic) {
      x = resize_bicubic(x, x.dim(2) / s, x.dim(3) / s, true);
    } else {
      x = stride_sample(gaussian_blur(x, kBdSigma, kBdTaps), s);
    }
  }
  std::vector<double> values(x.data().begin(), x.data().end());
  const std::size_t per_frame = x.numel() / x.dim(0);
  for (std::size_t t = 0; t < x.dim(0); ++t) {
    double* frame = values.data() + t * per_frame;
    if (spec.noise_sigma > 0.0) {
      std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(t));
      std::normal_distribution<double> noise(0.0, spec.noise_sigma);
      for (std::size_t i = 0; i < per_frame; ++i) frame[i] += noise(rng);
    }
    for (std::size_t i = 0; i < per_frame; ++i) frame[i] = std::clamp(frame[i], 0.0, 1.0);
  }
  x = Tensor::from(x.shape(), std::move(values));
  if (spec.compression_q > 0.0) {
    x = compress_proxy(x, spec.compression_q);
    std::vector<double> clipped(x.data().begin(), x.data().end());
    for (auto& v : clipped) v = std::clamp(v, 0.0, 1.0);
    x = Tensor::from(x.shape(), std::move(clipped));
  }
  return x;
}

double quantization_step(double q, std::size_t u, std::size_t v) {
  // q = 4 matches the JPEG quality-50 table for orthonormal 8x8 coefficients
  // of [0, 1] pixels (table / 255).
  return q * kLumaTable[u % 8][v % 8] / 1020.0;
}

double quantize_coefficient(double coefficient, double step) {
  if (step <= 0.0) return coefficient;
  return std::nearbyint(coefficient / step) * step;
}

Tensor compress_proxy(const Tensor& frames, double q) {
  if (!(q >= 0.0)) throw std::invalid_argument("compress_proxy: q must be non-negative");
  if (q == 0.0) return frames.detach();
  NoGradGuard no_grad;
  const std::size_t b = kCompressionBlock;
  SpectralMap map = to_spectral(as_planes(frames.detach()), b);
  std::vector<double> coef(map.data.data().begin(), map.data.data().end());
  const std::size_t cells = map.channels() * map.rows() * map.cols();
  for (std::size_t t = 0; t < map.frames(); ++t)
    for (std::size_t f = 0; f < b * b; ++f) {
      const double step = quantization_step(q, f / b, f % b);
      double* band = coef.data() + (t * b * b + f) * cells;
      for (std::size_t i = 0; i < cells; ++i) band[i] = quantize_coefficient(band[i], step);
    }
  map.data = Tensor::from(map.data.shape(), std::move(coef));
  return reshape(from_spectral(map), frames.shape());
}

std::vector<double> spectral_curve(const Tensor& frames, std::size_t band_lo, std::size_t band_hi,
                                   std::size_t block) {
  if (block == 0) throw std::invalid_argument("spectral_curve: block size must be positive");
  const std::size_t bands = 2 * block - 1;
  if (band_lo > band_hi || band_hi >= bands)
    throw std::invalid_argument("spectral_curve: band range [" + std::to_string(band_lo) + ", " +
                                std::to_string(band_hi) + "] must satisfy lo <= hi < " + std::to_string(bands));
  NoGradGuard no_grad;
  const SpectralMap map = to_spectral(as_planes(frames.detach()), block);
  const auto coef = map.data.data();
  const std::size_t cells = map.channels() * map.rows() * map.cols();
  std::vector<double> total(bands, 0.0);
  std::vector<std::size_t> count(bands, 0);
  for (std::size_t t = 0; t < map.frames(); ++t)
    for (std::size_t f = 0; f < block * block; ++f) {
      const std::size_t r = f / block + f % block;
      const double* band = coef.data() + (t * block * block + f) * cells;
      for (std::size_t i = 0; i < cells; ++i) total[r] += std::abs(band[i]);
      count[r] += cells;
    }
  std::vector<double> curve;
  for (std::size_t r = band_lo; r <= band_hi; ++r) curve.push_back(total[r] / static_cast<double>(count[r]));
  return curve;
}

}  // namespace ftvsr
