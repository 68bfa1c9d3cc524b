#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ftvsr/tensor.hpp"

namespace ftvsr {

// Keys cubic convolution kernel; a = -0.5 is Catmull-Rom.
double cubic_kernel(double x, double a = -0.5);

// Per-output-sample source taps along one axis.
using AxisTaps = std::vector<std::vector<std::pair<std::size_t, double>>>;

// Half-pixel-centred cubic taps, edge-clamped. With `antialias` the kernel is
// widened by the reduction factor when shrinking.
AxisTaps cubic_taps(std::size_t in_size, std::size_t out_size, bool antialias);

// Separable cubic resize over the last two axes; differentiable (linear).
Tensor resize_bicubic(const Tensor& image, std::size_t out_height, std::size_t out_width, bool antialias = false);
// Integer-factor Catmull-Rom upsampling of the last two axes.
Tensor bicubic(const Tensor& image, std::size_t scale);

// 2D convolution, stride 1, zero padding k/2. x [N x Cin x H x W],
// weight [Cout x Cin x k x k] (k odd), bias [Cout].
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Bilinear backward warp: out(c, y, x) samples features at (x - dx, y - dy),
// clamped to the border. features [C x H x W], flow [2 x H x W] as (dx, dy).
// Differentiable with respect to the features only.
Tensor warp(const Tensor& features, const Tensor& flow);

}  // namespace ftvsr
