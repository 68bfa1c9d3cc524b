#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ftvsr_tools/commands.hpp"

namespace {

using namespace ftvsr;
using namespace ftvsr::tools;

// Options shared by every verb that builds a model.
void add_model_options(CLI::App* cmd, ModelConfig& m, std::string& scheme, std::string& attention) {
  cmd->add_option("--scale", m.scale, "Upsampling factor alpha")->check(CLI::PositiveNumber);
  cmd->add_option("--block", m.block, "DCT block size B")->check(CLI::PositiveNumber);
  cmd->add_option("--token-block", m.token_block, "Token extent K in spectral cells")->check(CLI::PositiveNumber);
  cmd->add_option("--channels", m.channels, "Frame channels")->check(CLI::PositiveNumber);
  cmd->add_option("--model-dim", m.model_dim, "Attention width d")->check(CLI::PositiveNumber);
  cmd->add_option("--heads", m.heads, "Attention heads")->check(CLI::PositiveNumber);
  cmd->add_option("--hidden-channels", m.hidden_channels, "Hidden state channels")->check(CLI::PositiveNumber);
  cmd->add_option("--upsampler-width", m.upsampler_width, "Upsampler conv width")->check(CLI::PositiveNumber);
  cmd->add_option("--scheme", scheme, "Attention scheme")->check(CLI::IsMember({"sf", "tf", "joint", "ts", "st"}));
  cmd->add_option("--attention", attention, "fa or dfa")->check(CLI::IsMember({"fa", "dfa"}));
  cmd->add_option("--feed-forward", m.feed_forward, "Feed-forward block after attention");
  cmd->add_option("--frequency-fusion", m.frequency_fusion, "One fusion matrix per DCT frequency");
  cmd->add_option("--zero-init-output", m.zero_init_output, "Start as exact bicubic upsampling");
}


void add_config_option(CLI::App* cmd) {
  cmd->add_option("--config", "key=value file; flags and FTVSR_SEED take precedence");
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Rewrites `<verb> --config file ...` into explicit flags. Keys use the echoed
// config names (underscores or dashes). A key is skipped when the same flag is
// on the command line, and `seed` is skipped when FTVSR_SEED is set.
std::vector<std::string> expand_config(int argc, char** argv, CLI::App& app) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty()) return args;
  CLI::App* cmd = app.get_subcommand_no_throw(args.front());
  if (cmd == nullptr) return args;
  std::string file;
  std::vector<std::string> user{args.front()};
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      user.push_back(args[i]);
    }
  }
  if (file.empty()) return args;
  std::vector<std::string> out{args.front()};
  for (const auto& [raw, value] : read_key_values(file)) {
    std::string key = raw;
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "command" || value.empty()) continue;
    const std::string flag = "--" + key;
    if (cmd->get_option_no_throw(flag) == nullptr)
      throw CommandError("config " + file + ": unknown key '" + raw + "' for " + cmd->get_name());
    if (given_on_command_line(user, flag)) continue;
    if (key == "seed" && std::getenv("FTVSR_SEED") != nullptr) continue;
    out.push_back(flag + "=" + value);
  }
  out.insert(out.end(), user.begin() + 1, user.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-transformer video super-resolution toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a procedural toy corpus");
  add_config_option(synth_cmd);
  synth_cmd->add_option("--output", synth.output, "Dataset root")->required();
  synth_cmd->add_option("--clips", synth.clips);
  synth_cmd->add_option("--frames", synth.frames);
  synth_cmd->add_option("--size", synth.size, "HR frame edge in pixels");
  synth_cmd->add_option("--channels", synth.channels);
  synth_cmd->add_option("--seed", seed)->envname("FTVSR_SEED");

  DegradeOptions deg;
  std::string downsample = "bi";
  auto* deg_cmd = app.add_subcommand("degrade", "Blur, downsample, add noise and compress frames");
  add_config_option(deg_cmd);
  deg_cmd->add_option("--input", deg.input, "Frame directory, or dataset root with --dataset")->required();
  deg_cmd->add_option("--output", deg.output, "Output frame directory");
  deg_cmd->add_flag("--dataset", deg.dataset, "Write <clip>/lr for every <clip>/hr under --input");
  deg_cmd->add_option("--scale", deg.spec.scale)->check(CLI::PositiveNumber);
  deg_cmd->add_option("--downsample", downsample, "bi or bd")->check(CLI::IsMember({"bi", "bd"}));
  deg_cmd->add_option("--blur-sigma", deg.spec.blur_sigma, "Extra gaussian pre-blur, 0 disables");
  deg_cmd->add_option("--blur-size", deg.spec.blur_size, "Odd pre-blur kernel size");
  double noise_levels = 0.0;
  auto* noise_opt = deg_cmd->add_option("--noise", noise_levels, "Noise std in 8-bit levels (15 = level 15)");
  deg_cmd->add_option("--noise-sigma", deg.spec.noise_sigma, "Noise std in [0, 1] units")->excludes(noise_opt);
  deg_cmd->add_option("--quality,--compression-q", deg.spec.compression_q, "Compression step scale q, 0 disables");
  deg_cmd->add_option("--seed", seed)->envname("FTVSR_SEED");
  deg_cmd->add_option("--jobs", deg.jobs)->check(CLI::PositiveNumber);

  TrainOptions train;
  std::string train_scheme = "st", train_attention = "fa";
  train.model.scale = 2;
  train.model.block = 8;
  train.model.token_block = 2;
  train.model.model_dim = 16;
  train.model.frequency_fusion = true;
  auto* train_cmd = app.add_subcommand("train", "Train on a dataset with lr/ and hr/ clips");
  add_config_option(train_cmd);
  train_cmd->add_option("--data", train.data, "Dataset root")->required();
  train_cmd->add_option("--output", train.output, "Run directory")->required();
  train_cmd->add_option("--steps", train.steps, "Total optimizer steps")->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", train.batch)->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train.lr_base, "Base learning rate");
  train_cmd->add_option("--lr-min", train.lr_min, "Final cosine learning rate");
  train_cmd->add_option("--train-clips", train.train_clips, "Use the first N clips, 0 for all");
  train_cmd->add_option("--checkpoint-every", train.checkpoint_every);
  train_cmd->add_option("--augment", train.augment, "Random rotations and flips");
  train_cmd->add_flag("--resume", train.resume, "Continue from <output>/checkpoint");
  train_cmd->add_option("--seed", seed)->envname("FTVSR_SEED");
  add_model_options(train_cmd, train.model, train_scheme, train_attention);

  EvalOptions eval;
  std::string channel = "rgb", restored, reference;
  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM of a checkpoint or the bicubic baseline");
  add_config_option(eval_cmd);
  eval_cmd->add_option("--data", eval.data, "Dataset root");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint directory; omit for bicubic");
  eval_cmd->add_option("--output", eval.output, "Report directory");
  eval_cmd->add_option("--first-clip", eval.first_clip, "Evaluate clips from this index on");
  eval_cmd->add_option("--channel", channel, "rgb or y")->check(CLI::IsMember({"rgb", "y"}));
  eval_cmd->add_option("--restored", restored, "Score this frame directory against --reference");
  eval_cmd->add_option("--reference", reference);
  eval_cmd->add_option("--jobs", eval.jobs)->check(CLI::PositiveNumber);

  SpectraOptions spectra;
  auto* spectra_cmd = app.add_subcommand("spectra", "Amplitude per radial DCT band");
  add_config_option(spectra_cmd);
  spectra_cmd->add_option("--input", spectra.input, "Frame directory")->required();
  spectra_cmd->add_option("--reference", spectra.reference, "Optional frame directory to compare against");
  spectra_cmd->add_option("--output", spectra.output, "CSV file")->required();
  spectra_cmd->add_option("--band-lo", spectra.band_lo);
  spectra_cmd->add_option("--band-hi", spectra.band_hi);
  spectra_cmd->add_option("--block", spectra.block)->check(CLI::PositiveNumber);

  GradcheckOptions grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");
  grad_cmd->add_option("--output", grad.output, "Optional CSV copy of the table");
  grad_cmd->add_option("--seed", grad.seed);

  try {
    std::vector<std::string> args = expand_config(argc, argv, app);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return EXIT_FAILURE;
  }

  try {
    if (*synth_cmd) {
      synth.seed = seed;
      cmd_synth(synth);
    } else if (*deg_cmd) {
      deg.seed = seed;
      deg.spec.downsample = parse_downsample(downsample);
      if (noise_opt->count() > 0) deg.spec.noise_sigma = noise_levels / 255.0;
      cmd_degrade(deg);
    } else if (*train_cmd) {
      train.model.seed = seed;
      train.model.scheme = parse_scheme(train_scheme);
      train.model.attention = parse_attention_kind(train_attention);
      cmd_train(train, std::cerr);
    } else if (*eval_cmd) {
      eval.channel_mode = parse_channel_mode(channel);
      EvalReport report;
      if (!restored.empty()) {
        if (reference.empty()) throw CommandError("eval: --restored needs --reference");
        report = evaluate_frame_dirs(restored, reference, eval.channel_mode);
        if (!eval.output.empty()) {
          std::filesystem::create_directories(eval.output);
          write_report_csv(eval.output / "eval.csv", report);
        }
      } else {
        if (eval.data.empty() || eval.output.empty()) throw CommandError("eval: --data and --output are required");
        report = cmd_eval(eval);
      }
      std::cout << "mean_psnr_db=" << report.mean_psnr_db << " mean_ssim=" << report.mean_ssim << '\n';
    } else if (*spectra_cmd) {
      cmd_spectra(spectra);
    } else if (*grad_cmd) {
      return cmd_gradcheck(grad, std::cout).all_passed() ? EXIT_SUCCESS : EXIT_FAILURE;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
