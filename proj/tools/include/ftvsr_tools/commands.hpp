#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ftvsr/degradation.hpp"
#include "ftvsr/gradcheck.hpp"
#include "ftvsr/keyvalue.hpp"
#include "ftvsr/metrics.hpp"
#include "ftvsr/model.hpp"

namespace ftvsr::tools {

// Failure that the CLI reports on stderr with a non-zero exit code.
class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset layout: <root>/<clip>/hr/*.ppm and <root>/<clip>/lr/*.ppm, clips in
// name order.
std::vector<std::filesystem::path> list_clips(const std::filesystem::path& root);

struct SynthOptions {
  std::filesystem::path output;
  std::size_t clips = 20;
  std::size_t frames = 10;
  std::size_t size = 32;
  std::size_t channels = 3;
  std::uint64_t seed = 0;

  KeyValues echo() const;
};
// Writes <output>/clip_NNN/hr frames.
void cmd_synth(const SynthOptions& options);

struct DegradeOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  // Treat input as a dataset root and write <clip>/lr next to every <clip>/hr.
  bool dataset = false;
  DegradationSpec spec;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  KeyValues echo() const;
};
// Frame sequence in, degraded sequence plus degradation.txt manifest out.
void cmd_degrade(const DegradeOptions& options);

struct TrainOptions {
  std::filesystem::path data;
  std::filesystem::path output;
  ModelConfig model;
  std::size_t steps = 500;
  std::size_t batch = 8;
  double lr_base = 2e-4;
  double lr_min = 0.0;
  // Training clips are the first `train_clips` of the dataset; 0 uses all.
  std::size_t train_clips = 0;
  std::size_t checkpoint_every = 100;
  // Random rotations and flips of each training clip.
  bool augment = true;
  bool resume = false;

  KeyValues echo() const;
};

struct TrainSummary {
  std::size_t first_step = 0;
  std::size_t last_step = 0;
  std::vector<double> losses;  // one per step run in this invocation
};

// Writes <output>/config.txt, <output>/loss.csv and <output>/checkpoint.
TrainSummary cmd_train(const TrainOptions& options, std::ostream& log);

struct EvalOptions {
  std::filesystem::path data;
  std::filesystem::path checkpoint;  // empty: bicubic baseline
  std::filesystem::path output;
  // Evaluate clips with index >= first_clip.
  std::size_t first_clip = 0;
  ChannelMode channel_mode = ChannelMode::kRgb;
  std::size_t jobs = 1;

  KeyValues echo() const;
};
// Per-clip <clip>.csv and a pooled eval.csv in the output directory.
EvalReport cmd_eval(const EvalOptions& options);

// Scores two frame directories against each other.
EvalReport evaluate_frame_dirs(const std::filesystem::path& restored, const std::filesystem::path& reference,
                               ChannelMode mode);

struct SpectraOptions {
  std::filesystem::path input;
  std::filesystem::path reference;  // optional second sequence
  std::filesystem::path output;     // CSV file
  std::size_t band_lo = 0;
  std::size_t band_hi = 14;
  std::size_t block = 8;

  KeyValues echo() const;
};
// CSV rows: band,input[,reference,gap]
void cmd_spectra(const SpectraOptions& options);

struct GradcheckOptions {
  std::filesystem::path output;  // optional CSV table
  std::uint64_t seed = 7;
};

struct GradcheckReport {
  std::vector<GradCheckResult> results;
  // Result of checking an op whose backward rule is deliberately wrong.
  GradCheckResult corrupted;
  bool all_passed() const;
};

// Finite-difference suite over every differentiable op and the tiny model.
GradcheckReport gradient_suite(std::uint64_t seed = 7);
GradcheckReport cmd_gradcheck(const GradcheckOptions& options, std::ostream& out);

// Writes the echoed configuration next to a command's outputs.
void write_echo(const std::filesystem::path& dir, const KeyValues& values);

}  // namespace ftvsr::tools
