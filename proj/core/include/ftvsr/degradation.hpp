#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ftvsr/keyvalue.hpp"
#include "ftvsr/tensor.hpp"

namespace ftvsr {

enum class DownsampleMode {
  kBicubic,     // BI: antialiased bicubic resize
  kBlurStride,  // BD: fixed gaussian blur, then stride sampling
};

struct DegradationSpec {
  // Optional pre-blur; sigma 0 disables it.
  double blur_sigma = 0.0;
  std::size_t blur_size = 0;
  std::size_t scale = 1;
  DownsampleMode downsample = DownsampleMode::kBicubic;
  double noise_sigma = 0.0;  // in [0, 1] pixel units
  double compression_q = 0.0;

  void validate() const;
  KeyValues to_key_values() const;
  static DegradationSpec from_key_values(const std::map<std::string, std::string>& values);
  bool operator==(const DegradationSpec&) const = default;
};

inline constexpr double kBdSigma = 1.6;
inline constexpr std::size_t kBdTaps = 13;
inline constexpr std::size_t kCompressionBlock = 8;

std::string downsample_name(DownsampleMode mode);
DownsampleMode parse_downsample(const std::string& name);

// Normalized 1D gaussian of odd length `size`.
std::vector<double> gaussian_kernel(double sigma, std::size_t size);

// Separable blur of the last two axes with reflect borders. Not differentiable.
Tensor gaussian_blur(const Tensor& frames, double sigma, std::size_t size);

// blur -> downsample -> noise -> clip -> compress. hr is [T x C x H x W] in
// [0, 1]; frame t draws its noise from seed ^ t.
Tensor degrade(const Tensor& hr, const DegradationSpec& spec, std::uint64_t seed);

// Quantization step of DCT coefficient (u, v) for quality scale q.
double quantization_step(double q, std::size_t u, std::size_t v);
// round(c / step) * step with ties to even.
double quantize_coefficient(double coefficient, double step);

// Block DCT quantization proxy on the last two axes of [... x H x W]. q = 0
// is the identity.
Tensor compress_proxy(const Tensor& frames, double q);

// Mean |coefficient| per radial band r = u + v in [band_lo, band_hi], over all
// blocks and channels of frames [... x H x W].
std::vector<double> spectral_curve(const Tensor& frames, std::size_t band_lo, std::size_t band_hi,
                                   std::size_t block = kCompressionBlock);

}  // namespace ftvsr
