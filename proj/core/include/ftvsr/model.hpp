#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftvsr/ftt.hpp"
#include "ftvsr/keyvalue.hpp"
#include "ftvsr/tensor.hpp"
#include "ftvsr/video_attention.hpp"

namespace ftvsr {

struct ModelConfig {
  std::size_t channels = 3;
  std::size_t scale = 4;        // alpha
  std::size_t block = 8;        // DCT block B
  std::size_t token_block = 4;  // K, in spectral cells
  std::size_t model_dim = 32;   // d
  std::size_t heads = 2;
  std::size_t hidden_channels = 16;  // C_h
  std::size_t upsampler_width = 16;
  SchemeKind scheme = SchemeKind::kSpaceTime;
  AttentionKind attention = AttentionKind::kFrequency;
  bool feed_forward = true;
  // One fusion matrix per DCT frequency instead of one shared matrix.
  bool frequency_fusion = false;
  // Zero the fusion and the upsampler's last conv so the initial model is
  // exactly bicubic upsampling.
  bool zero_init_output = true;
  std::uint64_t seed = 0;

  std::size_t token_width() const { return channels * token_block * token_block; }
  std::size_t hidden_token_width() const { return hidden_channels * token_block * token_block; }
  void validate() const;
  KeyValues to_key_values() const;
  static ModelConfig from_key_values(const std::map<std::string, std::string>& values);
};

struct ModelParams {
  ModelConfig config;
  // Upsampler residual stack on the bicubic image.
  Tensor up_w1, up_b1, up_w2, up_b2;
  // Hidden-state tokens -> key/value token width.
  Tensor hidden_embed;
  SchemeUnits attention;
  // Fusion: concat(attention output, spectral tokens) -> token width.
  // [d + w x w], or [F x d + w x w] with frequency_fusion.
  Tensor fuse_w;
  // Hidden update: concat(time output, spectral tokens) -> hidden token width.
  Tensor hidden_w;

  static ModelParams init(const ModelConfig& config);
  // Handles share storage with the model.
  NamedTensors named() const;
  // Copies values by name; every parameter must be present with its shape.
  void load(const NamedTensors& tensors);
  std::size_t parameter_count() const;
};

struct HiddenState {
  Tensor features;  // [C_h x alpha H x alpha W]
  std::size_t frame_index = 0;
};

HiddenState initial_state(const ModelParams& params, std::size_t lr_height, std::size_t lr_width);
// Zero flow [2 x H x W].
Tensor zero_flow(std::size_t height, std::size_t width);

// Bicubic upsampling plus the learned residual conv stack. lr is [T x C x H x W].
Tensor upsample_phi(const Tensor& lr, const ModelParams& params);

struct FrameOutput {
  Tensor sr;  // [C x alpha H x alpha W]
  HiddenState state;
};

// Restores frame t (0-based) of lr_seq [T x C x H x W]. flow is [2 x aH x aW]
// or undefined for zero flow.
FrameOutput forward_frame(const Tensor& lr_seq, std::size_t t, const HiddenState& state, const ModelParams& params,
                          const Tensor& flow = {});

// Left-to-right recurrence. flows, when given, has one entry per frame.
Tensor forward_sequence(const Tensor& lr_seq, const ModelParams& params, const std::vector<Tensor>& flows = {});

inline constexpr double kCharbonnierEpsilon = 1e-3;

// (1/T) sum_t sqrt(||hr_t - sr_t||^2 + eps^2) over [T x ...] sequences.
Tensor charbonnier_loss(const Tensor& sr, const Tensor& hr, double epsilon = kCharbonnierEpsilon);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // One update of every tensor from its accumulated gradient.
  void step(const NamedTensors& params, double learning_rate);

  std::size_t steps() const { return steps_; }
  NamedTensors state() const;
  void load_state(const NamedTensors& state, std::size_t steps);

 private:
  AdamOptions options_;
  std::size_t steps_ = 0;
  std::map<std::string, std::vector<double>> first_, second_;
};

// lr_min + (lr_base - lr_min) (1 + cos(pi step / total)) / 2
double cosine_learning_rate(double base, double minimum, std::size_t step, std::size_t total);

struct Clip {
  Tensor lr;  // [T x C x H x W]
  Tensor hr;  // [T x C x aH x aW]
};

// One of the 8 rotations/flips of the frame plane, applied to lr and hr alike.
// Bit 0 flips columns, bit 1 flips rows, bit 2 transposes first.
Clip dihedral(const Clip& clip, unsigned code);
Tensor dihedral(const Tensor& frames, unsigned code);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Forward, mean Charbonnier loss over the batch, backward, one Adam update.
// Returns the loss. Non-finite loss or gradients throw TrainingError and
// leave the parameters untouched.
double train_step(const std::vector<Clip>& batch, ModelParams& params, Adam& optimizer, double learning_rate);

struct Checkpoint {
  ModelParams params;
  Adam optimizer;
  std::size_t step = 0;
};

void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params, const Adam& optimizer,
                     std::size_t step);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace ftvsr
