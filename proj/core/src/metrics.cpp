#include "ftvsr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ftvsr/degradation.hpp"
#include "ftvsr/keyvalue.hpp"

namespace ftvsr {

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()));
  if (a.numel() == 0) throw std::invalid_argument(std::string(op) + ": empty input");
}

constexpr std::size_t kWindow = 11;
constexpr double kWindowSigma = 1.5;

}  // namespace

double psnr(const Tensor& a, const Tensor& b, double peak) {
  require_same(a, b, "psnr");
  const auto x = a.data(), y = b.data();
  double mse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mse += (x[i] - y[i]) * (x[i] - y[i]);
  mse /= static_cast<double>(x.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const Tensor& a, const Tensor& b, double peak) {
  require_same(a, b, "ssim");
  if (a.rank() < 2) throw std::invalid_argument("ssim: expected at least two axes");
  const std::size_t h = a.dim(a.rank() - 2), w = a.dim(a.rank() - 1);
  if (h < kWindow || w < kWindow)
    throw std::invalid_argument("ssim: image " + std::to_string(h) + "x" + std::to_string(w) +
                                " is smaller than the 11x11 window");
  const auto g = gaussian_kernel(kWindowSigma, kWindow);
  const double c1 = (0.01 * peak) * (0.01 * peak), c2 = (0.03 * peak) * (0.03 * peak);
  const std::size_t planes = a.numel() / (h * w), oh = h - kWindow + 1, ow = w - kWindow + 1;
  const auto x = a.data(), y = b.data();
  double total = 0.0;
  for (std::size_t p = 0; p < planes; ++p) {
    const double* px = x.data() + p * h * w;
    const double* py = y.data() + p * h * w;
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (std::size_t u = 0; u < kWindow; ++u)
          for (std::size_t v = 0; v < kWindow; ++v) {
            const double wt = g[u] * g[v];
            const double vx = px[(i + u) * w + j + v], vy = py[(i + u) * w + j + v];
            mx += wt * vx;
            my += wt * vy;
            sxx += wt * vx * vx;
            syy += wt * vy * vy;
            sxy += wt * vx * vy;
          }
        const double vxx = sxx - mx * mx, vyy = syy - my * my, vxy = sxy - mx * my;
        total += ((2 * mx * my + c1) * (2 * vxy + c2)) / ((mx * mx + my * my + c1) * (vxx + vyy + c2));
      }
  }
  return total / static_cast<double>(planes * oh * ow);
}

Tensor to_y_channel(const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3)
    throw std::invalid_argument("to_y_channel: expected [3 x H x W], got " + shape_to_string(rgb.shape()));
  const std::size_t n = rgb.dim(1) * rgb.dim(2);
  const auto src = rgb.data();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = 0.299 * src[i] + 0.587 * src[n + i] + 0.114 * src[2 * n + i];
  return Tensor::from({1, rgb.dim(1), rgb.dim(2)}, std::move(y));
}

Tensor clip_unit(const Tensor& x) {
  std::vector<double> v(x.data().begin(), x.data().end());
  for (auto& e : v) e = std::clamp(e, 0.0, 1.0);
  return Tensor::from(x.shape(), std::move(v));
}

std::string channel_mode_name(ChannelMode mode) { return mode == ChannelMode::kRgb ? "rgb" : "y"; }

ChannelMode parse_channel_mode(const std::string& name) {
  if (name == "rgb") return ChannelMode::kRgb;
  if (name == "y") return ChannelMode::kY;
  throw std::invalid_argument("unknown channel mode '" + name + "' (expected rgb or y)");
}

EvalReport evaluate_sequence(const Tensor& restored, const Tensor& reference, ChannelMode mode) {
  require_same(restored, reference, "evaluate_sequence");
  if (restored.rank() != 4) throw std::invalid_argument("evaluate_sequence: expected [T x C x H x W]");
  NoGradGuard no_grad;
  EvalReport report;
  report.channel_mode = mode;
  for (std::size_t t = 0; t < restored.dim(0); ++t) {
    const auto& s = restored.shape();
    Tensor a = clip_unit(reshape(slice(restored.detach(), 0, t, 1), {s[1], s[2], s[3]}));
    Tensor b = clip_unit(reshape(slice(reference.detach(), 0, t, 1), {s[1], s[2], s[3]}));
    if (mode == ChannelMode::kY) {
      a = to_y_channel(a);
      b = to_y_channel(b);
    }
    report.per_frame.push_back({psnr(a, b), ssim(a, b)});
  }
  return merge_reports({report});
}

EvalReport merge_reports(const std::vector<EvalReport>& reports) {
  EvalReport out;
  if (!reports.empty()) out.channel_mode = reports.front().channel_mode;
  for (const auto& r : reports) out.per_frame.insert(out.per_frame.end(), r.per_frame.begin(), r.per_frame.end());
  for (const auto& f : out.per_frame) {
    out.mean_psnr_db += f.psnr_db;
    out.mean_ssim += f.ssim;
  }
  if (!out.per_frame.empty()) {
    out.mean_psnr_db /= static_cast<double>(out.per_frame.size());
    out.mean_ssim /= static_cast<double>(out.per_frame.size());
  }
  return out;
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "frame_index,psnr_db,ssim\n";
  for (std::size_t i = 0; i < report.per_frame.size(); ++i)
    out << i << ',' << format_double(report.per_frame[i].psnr_db) << ',' << format_double(report.per_frame[i].ssim)
        << '\n';
  out << "mean," << format_double(report.mean_psnr_db) << ',' << format_double(report.mean_ssim) << '\n';
  return out.str();
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << report_csv(report);
}

}  // namespace ftvsr
