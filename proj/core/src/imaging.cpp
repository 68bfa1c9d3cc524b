#include "ftvsr/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace ftvsr {

double cubic_kernel(double x, double a) {
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

AxisTaps cubic_taps(std::size_t in_size, std::size_t out_size, bool antialias) {
  if (in_size == 0 || out_size == 0) throw std::invalid_argument("cubic_taps: empty axis");
  const double ratio = static_cast<double>(in_size) / static_cast<double>(out_size);
  const double stretch = (antialias && ratio > 1.0) ? ratio : 1.0;
  const double support = 2.0 * stretch;
  AxisTaps taps(out_size);
  for (std::size_t o = 0; o < out_size; ++o) {
    const double centre = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    const auto first = static_cast<std::ptrdiff_t>(std::floor(centre - support)) + 1;
    const auto last = static_cast<std::ptrdiff_t>(std::floor(centre + support));
    double total = 0.0;
    for (std::ptrdiff_t s = first; s <= last; ++s) {
      const double w = cubic_kernel((centre - static_cast<double>(s)) / stretch);
      if (w == 0.0) continue;
      const auto clamped = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(s, 0, static_cast<std::ptrdiff_t>(in_size) - 1));
      auto& list = taps[o];
      auto it = std::find_if(list.begin(), list.end(), [&](const auto& p) { return p.first == clamped; });
      if (it == list.end()) {
        list.emplace_back(clamped, w);
      } else {
        it->second += w;
      }
      total += w;
    }
    if (stretch != 1.0)
      for (auto& p : taps[o]) p.second /= total;
  }
  return taps;
}

namespace {

// out[l][o_y][o_x] = sum rows/cols taps of in[l][.][.]; `adjoint` runs the transpose.
void apply_separable(const AxisTaps& ty, const AxisTaps& tx, std::size_t lead, std::size_t in_h, std::size_t in_w,
                     const double* in, double* out, bool adjoint) {
  const std::size_t out_h = ty.size(), out_w = tx.size();
  if (!adjoint) {
    std::vector<double> rows(out_h * in_w);
    for (std::size_t l = 0; l < lead; ++l) {
      const double* src = in + l * in_h * in_w;
      std::fill(rows.begin(), rows.end(), 0.0);
      for (std::size_t oy = 0; oy < out_h; ++oy)
        for (const auto& [sy, wy] : ty[oy])
          for (std::size_t x = 0; x < in_w; ++x) rows[oy * in_w + x] += wy * src[sy * in_w + x];
      double* dst = out + l * out_h * out_w;
      for (std::size_t oy = 0; oy < out_h; ++oy)
        for (std::size_t ox = 0; ox < out_w; ++ox) {
          double acc = 0.0;
          for (const auto& [sx, wx] : tx[ox]) acc += wx * rows[oy * in_w + sx];
          dst[oy * out_w + ox] = acc;
        }
    }
    return;
  }
  // Adjoint: `in` holds gradients of the resized image, `out` accumulates source gradients.
  std::vector<double> rows(out_h * in_w);
  for (std::size_t l = 0; l < lead; ++l) {
    const double* g = in + l * out_h * out_w;
    std::fill(rows.begin(), rows.end(), 0.0);
    for (std::size_t oy = 0; oy < out_h; ++oy)
      for (std::size_t ox = 0; ox < out_w; ++ox)
        for (const auto& [sx, wx] : tx[ox]) rows[oy * in_w + sx] += wx * g[oy * out_w + ox];
    double* dst = out + l * in_h * in_w;
    for (std::size_t oy = 0; oy < out_h; ++oy)
      for (const auto& [sy, wy] : ty[oy])
        for (std::size_t x = 0; x < in_w; ++x) dst[sy * in_w + x] += wy * rows[oy * in_w + x];
  }
}

}  // namespace

Tensor resize_bicubic(const Tensor& image, std::size_t out_height, std::size_t out_width, bool antialias) {
  if (image.rank() < 2) throw std::invalid_argument("resize_bicubic: rank must be at least 2");
  const auto& s = image.shape();
  const std::size_t in_h = s[s.size() - 2], in_w = s[s.size() - 1];
  if (in_h == 0 || in_w == 0 || out_height == 0 || out_width == 0)
    throw std::invalid_argument("resize_bicubic: non-positive dimensions");
  const std::size_t lead = image.numel() / (in_h * in_w);
  auto ty = std::make_shared<const AxisTaps>(cubic_taps(in_h, out_height, antialias));
  auto tx = std::make_shared<const AxisTaps>(cubic_taps(in_w, out_width, antialias));
  std::vector<double> out(lead * out_height * out_width);
  apply_separable(*ty, *tx, lead, in_h, in_w, image.data().data(), out.data(), false);
  Shape out_shape = s;
  out_shape[s.size() - 2] = out_height;
  out_shape[s.size() - 1] = out_width;
  auto px = image.impl_ptr();
  return make_op_result("resize_bicubic", std::move(out_shape), std::move(out), {image},
                        [px, ty, tx, lead, in_h, in_w](std::span<const double> g) {
                          apply_separable(*ty, *tx, lead, in_h, in_w, g.data(), px->grad_buffer().data(), true);
                        });
}

Tensor bicubic(const Tensor& image, std::size_t scale) {
  if (scale == 0) throw std::invalid_argument("bicubic: scale must be positive");
  const auto& s = image.shape();
  if (s.size() < 2) throw std::invalid_argument("bicubic: rank must be at least 2");
  return resize_bicubic(image, s[s.size() - 2] * scale, s[s.size() - 1] * scale, false);
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 4 || weight.rank() != 4 || bias.rank() != 1)
    throw std::invalid_argument("conv2d: expected x [N x C x H x W], weight [O x C x k x k], bias [O]");
  const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t cout = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != cin || weight.dim(3) != k || k % 2 == 0 || bias.dim(0) != cout)
    throw std::invalid_argument("conv2d: weight " + shape_to_string(weight.shape()) + " incompatible with input " +
                                shape_to_string(x.shape()));
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  const auto hh = static_cast<std::ptrdiff_t>(h), ww = static_cast<std::ptrdiff_t>(w);
  auto in = x.data();
  auto wt = weight.data();
  auto bs = bias.data();
  std::vector<double> out(n * cout * h * w);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < cout; ++o) {
      double* dst = out.data() + (b * cout + o) * h * w;
      std::fill(dst, dst + h * w, bs[o]);
      for (std::size_t c = 0; c < cin; ++c) {
        const double* src = in.data() + (b * cin + c) * h * w;
        for (std::ptrdiff_t ky = 0; ky < static_cast<std::ptrdiff_t>(k); ++ky)
          for (std::ptrdiff_t kx = 0; kx < static_cast<std::ptrdiff_t>(k); ++kx) {
            const double wv = wt[((o * cin + c) * k + static_cast<std::size_t>(ky)) * k + static_cast<std::size_t>(kx)];
            const std::ptrdiff_t dy = ky - r, dx = kx - r;
            for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(0, -dy); y < std::min(hh, hh - dy); ++y) {
              const double* srow = src + (y + dy) * ww;
              double* drow = dst + y * ww;
              for (std::ptrdiff_t xx = std::max<std::ptrdiff_t>(0, -dx); xx < std::min(ww, ww - dx); ++xx)
                drow[xx] += wv * srow[xx + dx];
            }
          }
      }
    }
  auto px = x.impl_ptr(), pw = weight.impl_ptr(), pb = bias.impl_ptr();
  return make_op_result(
      "conv2d", {n, cout, h, w}, std::move(out), {x, weight, bias},
      [px, pw, pb, n, cin, cout, h, w, k, r, hh, ww](std::span<const double> g) {
        double* gx = px->requires_grad ? px->grad_buffer().data() : nullptr;
        double* gw = pw->requires_grad ? pw->grad_buffer().data() : nullptr;
        if (pb->requires_grad) {
          auto& gb = pb->grad_buffer();
          for (std::size_t b = 0; b < n; ++b)
            for (std::size_t o = 0; o < cout; ++o)
              for (std::size_t i = 0; i < h * w; ++i) gb[o] += g[(b * cout + o) * h * w + i];
        }
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t o = 0; o < cout; ++o) {
            const double* grow = g.data() + (b * cout + o) * h * w;
            for (std::size_t c = 0; c < cin; ++c) {
              const double* src = px->data.data() + (b * cin + c) * h * w;
              for (std::ptrdiff_t ky = 0; ky < static_cast<std::ptrdiff_t>(k); ++ky)
                for (std::ptrdiff_t kx = 0; kx < static_cast<std::ptrdiff_t>(k); ++kx) {
                  const std::size_t widx = ((o * cin + c) * k + static_cast<std::size_t>(ky)) * k + static_cast<std::size_t>(kx);
                  const double wv = pw->data[widx];
                  const std::ptrdiff_t dy = ky - r, dx = kx - r;
                  double acc = 0.0;
                  for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(0, -dy); y < std::min(hh, hh - dy); ++y)
                    for (std::ptrdiff_t xx = std::max<std::ptrdiff_t>(0, -dx); xx < std::min(ww, ww - dx); ++xx) {
                      const double gv = grow[y * ww + xx];
                      acc += gv * src[(y + dy) * ww + xx + dx];
                      if (gx) gx[(b * cin + c) * h * w + static_cast<std::size_t>((y + dy) * ww + xx + dx)] += gv * wv;
                    }
                  if (gw) gw[widx] += acc;
                }
            }
          }
      });
}

Tensor warp(const Tensor& features, const Tensor& flow) {
  if (features.rank() != 3 || flow.rank() != 3 || flow.dim(0) != 2 || flow.dim(1) != features.dim(1) ||
      flow.dim(2) != features.dim(2)) {
    throw std::invalid_argument("warp: features " + shape_to_string(features.shape()) + " and flow " +
                                shape_to_string(flow.shape()) + " do not match");
  }
  const std::size_t c = features.dim(0), h = features.dim(1), w = features.dim(2);
  auto fl = flow.data();
  // Four taps per output pixel, shared by all channels.
  struct Taps {
    std::size_t idx[4];
    double wt[4];
  };
  auto taps = std::make_shared<std::vector<Taps>>(h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double sx = std::clamp(static_cast<double>(x) - fl[y * w + x], 0.0, static_cast<double>(w - 1));
      const double sy = std::clamp(static_cast<double>(y) - fl[h * w + y * w + x], 0.0, static_cast<double>(h - 1));
      const auto x0 = static_cast<std::size_t>(std::floor(sx)), y0 = static_cast<std::size_t>(std::floor(sy));
      const std::size_t x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const double ax = sx - static_cast<double>(x0), ay = sy - static_cast<double>(y0);
      (*taps)[y * w + x] = Taps{{y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1},
                                {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay}};
    }
  auto in = features.data();
  std::vector<double> out(c * h * w);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t p = 0; p < h * w; ++p) {
      const auto& t = (*taps)[p];
      const double* plane = in.data() + ch * h * w;
      out[ch * h * w + p] = t.wt[0] * plane[t.idx[0]] + t.wt[1] * plane[t.idx[1]] + t.wt[2] * plane[t.idx[2]] +
                            t.wt[3] * plane[t.idx[3]];
    }
  auto pf = features.impl_ptr();
  return make_op_result("warp", features.shape(), std::move(out), {features}, [pf, taps, c, h, w](std::span<const double> g) {
    auto& gf = pf->grad_buffer();
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t p = 0; p < h * w; ++p) {
        const auto& t = (*taps)[p];
        for (int j = 0; j < 4; ++j) gf[ch * h * w + t.idx[j]] += t.wt[j] * g[ch * h * w + p];
      }
  });
}

}  // namespace ftvsr
