#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ftvsr/tensor.hpp"

namespace ftvsr {

inline constexpr double kPsnrCap = 99.0;

// 10 log10(peak^2 / MSE); identical inputs give kPsnrCap.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

// Mean SSIM over the valid region of an 11x11 gaussian window (sigma 1.5),
// averaged over the leading planes of [... x H x W].
double ssim(const Tensor& a, const Tensor& b, double peak = 1.0);

// BT.601 luma of a [3 x H x W] frame, returned as [1 x H x W].
Tensor to_y_channel(const Tensor& rgb);

// Clamps to [0, 1]; evaluation only.
Tensor clip_unit(const Tensor& x);

enum class ChannelMode { kRgb, kY };

std::string channel_mode_name(ChannelMode mode);
ChannelMode parse_channel_mode(const std::string& name);

struct FrameScore {
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  std::vector<FrameScore> per_frame;
  double mean_psnr_db = 0.0;
  double mean_ssim = 0.0;
  ChannelMode channel_mode = ChannelMode::kRgb;
};

// Scores sequences [T x C x H x W] frame by frame after clipping to [0, 1].
EvalReport evaluate_sequence(const Tensor& restored, const Tensor& reference, ChannelMode mode = ChannelMode::kRgb);
// Pools the frames of several reports; means are over all frames.
EvalReport merge_reports(const std::vector<EvalReport>& reports);

// frame_index,psnr_db,ssim rows, then a "mean,<psnr>,<ssim>" summary line.
void write_report_csv(const std::filesystem::path& path, const EvalReport& report);
std::string report_csv(const EvalReport& report);

}  // namespace ftvsr
