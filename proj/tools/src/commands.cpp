#include "ftvsr_tools/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "ftvsr/attention.hpp"
#include "ftvsr/dct.hpp"
#include "ftvsr/frames.hpp"
#include "ftvsr/imaging.hpp"
#include "ftvsr/tokenizer.hpp"
#include "ftvsr/video_attention.hpp"

namespace ftvsr::tools {

namespace fs = std::filesystem;

namespace {

std::string bool_text(bool b) { return b ? "true" : "false"; }

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results are written
// by index, so merge order does not depend on scheduling.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr failure;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lock(mu);
          if (next >= count || failure) return;
          i = next++;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t clip_seed(std::uint64_t seed, std::size_t index) { return seed + 1000003ULL * index; }

}  // namespace

void write_echo(const fs::path& dir, const KeyValues& values) {
  fs::create_directories(dir);
  write_key_values(dir / "config.txt", values);
}

std::vector<fs::path> list_clips(const fs::path& root) {
  if (!fs::is_directory(root)) throw CommandError("dataset directory not found: " + root.string());
  std::vector<fs::path> clips;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::is_directory(e.path() / "hr")) clips.push_back(e.path());
  std::sort(clips.begin(), clips.end());
  if (clips.empty()) throw CommandError("no clips with an hr/ directory under " + root.string());
  return clips;
}

KeyValues SynthOptions::echo() const {
  return {{"command", "synth"},
          {"output", output.string()},
          {"clips", std::to_string(clips)},
          {"frames", std::to_string(frames)},
          {"size", std::to_string(size)},
          {"channels", std::to_string(channels)},
          {"seed", std::to_string(seed)}};
}

void cmd_synth(const SynthOptions& o) {
  if (o.clips == 0 || o.frames == 0 || o.size == 0) throw CommandError("synth: clips, frames and size must be positive");
  if (o.channels != 1 && o.channels != 3) throw CommandError("synth: channels must be 1 or 3");
  fs::create_directories(o.output);
  for (std::size_t i = 0; i < o.clips; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%03zu", i);
    write_frame_dir(o.output / name / "hr", synthetic_clip(clip_seed(o.seed, i), o.frames, o.channels, o.size, o.size));
  }
  write_key_values(o.output / "synth.txt", o.echo());
}

KeyValues DegradeOptions::echo() const {
  KeyValues kv = {{"command", "degrade"},
                  {"input", input.string()},
                  {"output", output.string()},
                  {"dataset", bool_text(dataset)},
                  {"seed", std::to_string(seed)}};
  for (auto& e : spec.to_key_values()) kv.push_back(e);
  return kv;
}

void cmd_degrade(const DegradeOptions& o) {
  try {
    o.spec.validate();
  } catch (const std::invalid_argument& e) {
    throw CommandError(e.what());
  }
  if (o.dataset) {
    const auto clips = list_clips(o.input);
    parallel_for(clips.size(), o.jobs, [&](std::size_t i) {
      const Tensor hr = read_frame_dir(clips[i] / "hr");
      write_frame_dir(clips[i] / "lr", degrade(hr, o.spec, clip_seed(o.seed, i)));
      write_key_values(clips[i] / "lr" / "degradation.txt", o.spec.to_key_values());
    });
    write_key_values(o.input / "degrade_config.txt", o.echo());
    return;
  }
  if (o.output.empty()) throw CommandError("degrade: --output is required unless --dataset is set");
  const Tensor hr = read_frame_dir(o.input);
  // Frames are independent given their derived seeds, so split by frame.
  const std::size_t frames = hr.dim(0);
  std::vector<Tensor> out(frames);
  const Tensor lr_all = [&] {
    if (o.jobs <= 1) return degrade(hr, o.spec, o.seed);
    parallel_for(frames, o.jobs, [&](std::size_t t) {
      // Frame t of a sequence draws noise from seed ^ t.
      out[t] = degrade(slice(hr, 0, t, 1), o.spec, o.seed ^ static_cast<std::uint64_t>(t));
    });
    return concat(out, 0);
  }();
  write_frame_dir(o.output, lr_all);
  write_key_values(o.output / "degradation.txt", o.spec.to_key_values());
  write_echo(o.output, o.echo());
}

KeyValues TrainOptions::echo() const {
  KeyValues kv = {{"command", "train"},
                  {"data", data.string()},
                  {"output", output.string()},
                  {"steps", std::to_string(steps)},
                  {"batch", std::to_string(batch)},
                  {"lr", format_double(lr_base)},
                  {"lr-min", format_double(lr_min)},
                  {"train-clips", std::to_string(train_clips)},
                  {"checkpoint-every", std::to_string(checkpoint_every)},
                  {"augment", bool_text(augment)}};
  for (auto& [k, v] : model.to_key_values()) kv.emplace_back(k, v);
  return kv;
}

namespace {

struct Dataset {
  std::vector<std::string> names;
  std::vector<Clip> clips;
};

Dataset load_dataset(const fs::path& root, std::size_t first, std::size_t count) {
  const auto paths = list_clips(root);
  if (first >= paths.size()) throw CommandError("dataset has only " + std::to_string(paths.size()) + " clips");
  const std::size_t last = count == 0 ? paths.size() : std::min(paths.size(), first + count);
  Dataset d;
  for (std::size_t i = first; i < last; ++i) {
    if (!fs::is_directory(paths[i] / "lr"))
      throw CommandError("clip " + paths[i].string() + " has no lr/ frames; run degrade --dataset first");
    d.names.push_back(paths[i].filename().string());
    d.clips.push_back({read_frame_dir(paths[i] / "lr"), read_frame_dir(paths[i] / "hr")});
  }
  return d;
}

void check_geometry(const Clip& clip, const ModelConfig& config, const std::string& name) {
  const auto& l = clip.lr.shape();
  const auto& h = clip.hr.shape();
  if (l[0] != h[0] || l[1] != h[1] || l[2] * config.scale != h[2] || l[3] * config.scale != h[3])
    throw CommandError("clip " + name + ": lr " + shape_to_string(l) + " and hr " + shape_to_string(h) +
                       " do not match scale " + std::to_string(config.scale));
  if (l[1] != config.channels)
    throw CommandError("clip " + name + " has " + std::to_string(l[1]) + " channels, model expects " +
                       std::to_string(config.channels));
}

}  // namespace

TrainSummary cmd_train(const TrainOptions& o, std::ostream& log) {
  if (o.steps == 0 || o.batch == 0) throw CommandError("train: steps and batch must be positive");
  if (!(o.lr_base > 0.0) || !(o.lr_min >= 0.0)) throw CommandError("train: learning rates must be positive");
  try {
    o.model.validate();
  } catch (const std::invalid_argument& e) {
    throw CommandError(e.what());
  }
  const Dataset data = load_dataset(o.data, 0, o.train_clips);
  for (std::size_t i = 0; i < data.clips.size(); ++i) check_geometry(data.clips[i], o.model, data.names[i]);

  const fs::path ckpt_dir = o.output / "checkpoint";
  const fs::path loss_path = o.output / "loss.csv";
  fs::create_directories(o.output);

  ModelParams params = ModelParams::init(o.model);
  Adam optimizer;
  std::size_t step = 0;
  if (o.resume && fs::exists(ckpt_dir / "model.txt")) {
    Checkpoint c = load_checkpoint(ckpt_dir);
    if (c.params.config.to_key_values() != o.model.to_key_values())
      throw CommandError("train: checkpoint model configuration differs from the requested one");
    params = std::move(c.params);
    optimizer = std::move(c.optimizer);
    step = c.step;
    // Drop log rows past the checkpoint so the log matches an uninterrupted run.
    std::vector<std::string> kept;
    if (std::ifstream in(loss_path); in) {
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const bool header = line.rfind("step", 0) == 0;
        if (!header && std::stoul(line.substr(0, line.find(','))) > step) break;
        kept.push_back(line);
      }
    }
    std::ofstream out(loss_path, std::ios::trunc);
    for (const auto& l : kept) out << l << '\n';
  } else {
    std::ofstream(loss_path, std::ios::trunc) << "step,lr,loss\n";
  }
  write_echo(o.output, o.echo());

  TrainSummary summary;
  summary.first_step = step + 1;
  std::ofstream loss_log(loss_path, std::ios::app);
  const std::size_t n = data.clips.size();
  while (step < o.steps) {
    const double lr = cosine_learning_rate(o.lr_base, o.lr_min, step, o.steps);
    std::vector<Clip> batch;
    std::mt19937_64 aug(o.model.seed ^ (0x9e3779b97f4a7c15ULL * (step + 1)));
    for (std::size_t j = 0; j < o.batch; ++j) {
      const Clip& clip = data.clips[(step * o.batch + j) % n];
      batch.push_back(o.augment ? dihedral(clip, static_cast<unsigned>(aug() % 8)) : clip);
    }
    double loss = 0.0;
    try {
      loss = train_step(batch, params, optimizer, lr);
    } catch (const TrainingError& e) {
      throw CommandError("train: step " + std::to_string(step + 1) + ": " + e.what() +
                         "; last good checkpoint kept at " + ckpt_dir.string());
    }
    ++step;
    summary.losses.push_back(loss);
    loss_log << step << ',' << format_double(lr) << ',' << format_double(loss) << '\n';
    loss_log.flush();
    if (step % 50 == 0 || step == o.steps) log << "step " << step << " loss " << loss << '\n';
    if ((o.checkpoint_every != 0 && step % o.checkpoint_every == 0) || step == o.steps)
      save_checkpoint(ckpt_dir, params, optimizer, step);
  }
  summary.last_step = step;
  return summary;
}

KeyValues EvalOptions::echo() const {
  return {{"command", "eval"},
          {"data", data.string()},
          {"checkpoint", checkpoint.string()},
          {"output", output.string()},
          {"first-clip", std::to_string(first_clip)},
          {"channel", channel_mode_name(channel_mode)}};
}

EvalReport cmd_eval(const EvalOptions& o) {
  std::optional<ModelParams> params;
  if (!o.checkpoint.empty()) {
    try {
      params = load_checkpoint(o.checkpoint).params;
    } catch (const std::exception& e) {
      throw CommandError(std::string("eval: cannot load checkpoint: ") + e.what());
    }
  }
  const Dataset data = load_dataset(o.data, o.first_clip, 0);
  std::vector<EvalReport> reports(data.clips.size());
  parallel_for(data.clips.size(), o.jobs, [&](std::size_t i) {
    NoGradGuard guard;
    const Clip& clip = data.clips[i];
    Tensor restored;
    if (params) {
      check_geometry(clip, params->config, data.names[i]);
      restored = forward_sequence(clip.lr, *params);
    } else {
      const std::size_t s = clip.hr.dim(2) / clip.lr.dim(2);
      restored = bicubic(clip.lr, s);
    }
    reports[i] = evaluate_sequence(restored, clip.hr, o.channel_mode);
  });
  fs::create_directories(o.output);
  for (std::size_t i = 0; i < reports.size(); ++i) write_report_csv(o.output / (data.names[i] + ".csv"), reports[i]);
  const EvalReport pooled = merge_reports(reports);
  write_report_csv(o.output / "eval.csv", pooled);
  write_echo(o.output, o.echo());
  return pooled;
}

EvalReport evaluate_frame_dirs(const fs::path& restored, const fs::path& reference, ChannelMode mode) {
  return evaluate_sequence(read_frame_dir(restored), read_frame_dir(reference), mode);
}

KeyValues SpectraOptions::echo() const {
  return {{"command", "spectra"},
          {"input", input.string()},
          {"reference", reference.string()},
          {"output", output.string()},
          {"band-lo", std::to_string(band_lo)},
          {"band-hi", std::to_string(band_hi)},
          {"block", std::to_string(block)}};
}

void cmd_spectra(const SpectraOptions& o) {
  if (o.band_lo > o.band_hi)
    throw CommandError("spectra: band-lo (" + std::to_string(o.band_lo) + ") exceeds band-hi (" +
                       std::to_string(o.band_hi) + ")");
  if (o.block == 0 || o.band_hi >= 2 * o.block - 1)
    throw CommandError("spectra: band-hi must be below " + std::to_string(2 * o.block - 1) + " for block " +
                       std::to_string(o.block));
  const auto curve = spectral_curve(read_frame_dir(o.input), o.band_lo, o.band_hi, o.block);
  std::vector<double> ref;
  if (!o.reference.empty()) ref = spectral_curve(read_frame_dir(o.reference), o.band_lo, o.band_hi, o.block);
  std::ofstream out(o.output);
  if (!out) throw CommandError("spectra: cannot write " + o.output.string());
  out << (ref.empty() ? "band,input\n" : "band,input,reference,gap\n");
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << o.band_lo + i << ',' << format_double(curve[i]);
    if (!ref.empty()) out << ',' << format_double(ref[i]) << ',' << format_double(ref[i] - curve[i]);
    out << '\n';
  }
}

bool GradcheckReport::all_passed() const {
  return !corrupted.passed &&
         std::all_of(results.begin(), results.end(), [](const GradCheckResult& r) { return r.passed; });
}

namespace {

class SuiteBuilder {
 public:
  explicit SuiteBuilder(std::uint64_t seed) : rng_(seed) {}

  Tensor input(Shape shape, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = d(rng_);
    return Tensor::from(std::move(shape), std::move(v), true);
  }
  Tensor weights(const Shape& shape) {
    auto t = input(shape);
    t.set_requires_grad(false);
    return t;
  }
  std::mt19937_64& rng() { return rng_; }

  // Checks op(inputs) through a fixed random projection.
  void check(const std::string& name, const std::vector<Tensor>& inputs, const std::function<Tensor()>& op,
             GradCheckOptions options = {}) {
    Tensor probe;
    {
      NoGradGuard guard;
      probe = weights(op().shape());
    }
    results.push_back(gradcheck(name, [&] { return projection_loss(op(), probe); }, inputs, options));
  }

  std::vector<GradCheckResult> results;

 private:
  std::mt19937_64 rng_;
};

AttentionLayer random_layer(std::size_t wq, std::size_t wkv, std::size_t d, std::size_t heads, std::size_t out,
                            bool ffn, std::mt19937_64& rng) {
  return AttentionLayer::random({wq, wkv, d, heads, out, ffn}, rng);
}

std::vector<Tensor> layer_tensors(const AttentionLayer& layer) {
  NamedTensors named;
  layer.collect("l", named);
  std::vector<Tensor> out;
  for (auto& [n, t] : named) out.push_back(t);
  return out;
}

// y = x^2 whose backward claims 2.2 x.
Tensor corrupted_square(const Tensor& x) {
  std::vector<double> v(x.data().begin(), x.data().end());
  for (auto& e : v) e *= e;
  auto xi = x.impl_ptr();
  return make_op_result("corrupted_square", x.shape(), std::move(v), {x}, [xi](std::span<const double> g) {
    auto& gx = xi->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * 2.2 * xi->data[i];
  });
}

}  // namespace

GradcheckReport gradient_suite(std::uint64_t seed) {
  SuiteBuilder s(seed);
  auto& rng = s.rng();

  const Tensor a = s.input({3, 4}), b = s.input({3, 4}), m = s.input({4, 5}), bias = s.input({4});
  const Tensor pos = s.input({3, 4}, 0.5, 2.0);
  s.check("add", {a, b}, [&] { return add(a, b); });
  s.check("sub", {a, b}, [&] { return sub(a, b); });
  s.check("mul", {a, b}, [&] { return mul(a, b); });
  s.check("scale", {a}, [&] { return scale(a, -1.7); });
  s.check("add_scalar", {a}, [&] { return add_scalar(a, 0.3); });
  s.check("sqrt", {pos}, [&] { return sqrt(pos); });
  s.check("tanh", {a}, [&] { return tanh(a); });
  s.check("matmul", {a, m}, [&] { return matmul(a, m); });
  s.check("add_row_bias", {a, bias}, [&] { return add_row_bias(a, bias); });
  s.check("softmax_rows", {a}, [&] { return softmax(a, 1); });
  s.check("softmax_cols", {a}, [&] { return softmax(a, 0); });
  s.check("reshape", {a}, [&] { return reshape(a, {2, 6}); });
  const Tensor cube = s.input({2, 3, 4});
  s.check("permute", {cube}, [&] { return permute(cube, {2, 0, 1}); });
  s.check("transpose", {a}, [&] { return transpose(a); });
  s.check("slice", {cube}, [&] { return slice(cube, 1, 1, 2); });
  s.check("concat", {a, b}, [&] { return concat({a, b}, 1); });
  s.check("gather", {a}, [&] { return gather(a, {0, 5, 5, 11, 3}, {5}); });
  s.check("sum", {a}, [&] { return sum(a); });
  s.check("sum_axis", {cube}, [&] { return sum(cube, 1); });
  s.check("mean", {a}, [&] { return mean(a); });

  const Tensor patch = s.input({4, 4});
  s.check("dct2", {patch}, [&] { return dct2(patch); });
  s.check("idct2", {patch}, [&] { return idct2(patch); });
  const Tensor frames = s.input({2, 2, 4, 8});
  s.check("block_dct", {frames}, [&] { return block_dct(frames, 2); });
  const Tensor spectral = s.input({2, 4, 2, 2, 4});
  s.check("block_idct", {spectral}, [&] { return block_idct(spectral, 2); });
  const Tensor odd = s.input({1, 2, 5, 7});
  s.check("reflect_pad", {odd}, [&] { return reflect_pad(odd, 3, 1); });
  s.check("spectral_roundtrip_padded", {odd}, [&] { return from_spectral(to_spectral(odd, 2, 4)); });
  const Tensor spec2 = s.input({2, 4, 3, 4, 2});
  s.check("tokens_from_spectral", {spec2}, [&] { return tokens_from_spectral(spec2, 2); });
  const Tensor toks = s.input({2, 2, 4, 12});
  s.check("spectral_from_tokens", {toks}, [&] { return spectral_from_tokens(toks, 3, 2, 2, 1); });

  {
    const Tensor q = s.input({5, 6}), k = s.input({7, 6}), v = s.input({7, 6});
    const AttentionLayer layer = random_layer(6, 6, 6, 1, 6, false, rng);
    auto inputs = layer_tensors(layer);
    inputs.insert(inputs.end(), {q, k, v});
    s.check("freq_attention", inputs, [&] { return freq_attention(q, k, v, layer); });
    const AttentionLayer mh = random_layer(6, 6, 8, 2, 6, true, rng);
    auto mh_inputs = layer_tensors(mh);
    mh_inputs.insert(mh_inputs.end(), {q, k, v});
    s.check("multi_head_ffn", mh_inputs, [&] { return feed_forward(multi_head(q, k, v, mh), mh); });
  }
  {
    const Tensor grid = s.input({2, 3, 4, 4});
    const AttentionLayer layer = random_layer(4, 4, 4, 2, 4, true, rng);
    auto inputs = layer_tensors(layer);
    inputs.push_back(grid);
    s.check("lfa", inputs, [&] { return lfa(grid, layer); });
    s.check("gfa", inputs, [&] { return gfa(grid, layer); });
    DualAttention dual = DualAttention::random({4, 4, 4, 2, 4, false}, rng);
    NamedTensors named;
    dual.collect("d", named);
    std::vector<Tensor> dual_inputs = {grid};
    for (auto& [n, t] : named) dual_inputs.push_back(t);
    s.check("dfa", dual_inputs, [&] { return dfa(grid, grid, grid, dual); });
  }
  {
    const Tensor grid = s.input({3, 2, 4, 4});
    for (auto kind : {SchemeKind::kSpace, SchemeKind::kTime, SchemeKind::kJoint, SchemeKind::kTimeSpace,
                      SchemeKind::kSpaceTime}) {
      SchemeUnits units;
      units.primary = AttentionUnit::random(AttentionKind::kFrequency, {4, 4, 4, 2, 4, true}, rng);
      units.secondary = AttentionUnit::random(AttentionKind::kFrequency, {4, 4, 4, 2, 4, true}, rng);
      NamedTensors named;
      units.primary.collect("p", named);
      if (is_divided(kind)) units.secondary.collect("s", named);
      std::vector<Tensor> inputs = {grid};
      for (auto& [n, t] : named) inputs.push_back(t);
      s.check("scheme_" + std::string(scheme_name(kind)), inputs, [&] { return attend_scheme(grid, kind, units); });
    }
  }

  const Tensor img = s.input({1, 2, 5, 6});
  s.check("bicubic_up", {img}, [&] { return bicubic(img, 3); });
  const Tensor big = s.input({1, 2, 8, 12});
  s.check("bicubic_down_antialias", {big}, [&] { return resize_bicubic(big, 4, 6, true); });
  const Tensor cw = s.input({3, 2, 3, 3}), cb = s.input({3});
  s.check("conv2d", {img, cw, cb}, [&] { return conv2d(img, cw, cb); });
  const Tensor feat = s.input({2, 6, 7});
  Tensor flow;
  {
    // Keep samples away from pixel centres where bilinear weights kink.
    std::uniform_real_distribution<double> d(0.1, 0.9);
    std::vector<double> fv(2 * 6 * 7);
    for (auto& x : fv) x = (d(rng) < 0.5 ? -1.0 : 1.0) * d(rng);
    flow = Tensor::from({2, 6, 7}, fv);
  }
  s.check("warp", {feat}, [&] { return warp(feat, flow); });
  const Tensor sr = s.input({2, 1, 3, 3}), hr = s.input({2, 1, 3, 3});
  s.check("charbonnier", {sr, hr}, [&] { return charbonnier_loss(sr, hr); });

  {
    ModelConfig config;
    config.channels = 1;
    config.scale = 2;
    config.block = 2;
    config.token_block = 2;
    config.model_dim = 4;
    config.heads = 2;
    config.hidden_channels = 2;
    config.upsampler_width = 4;
    config.zero_init_output = false;
    config.seed = seed;
    const Tensor lr_seq = s.input({2, 1, 16, 16}, 0.0, 1.0);
    const Tensor target = s.input({2, 1, 32, 32}, 0.0, 1.0);
    for (auto kind : {SchemeKind::kSpaceTime, SchemeKind::kTimeSpace, SchemeKind::kJoint}) {
      config.scheme = kind;
      const ModelParams params = ModelParams::init(config);
      std::vector<Tensor> inputs = {lr_seq};
      for (auto& [n, t] : params.named()) inputs.push_back(t);
      GradCheckOptions options;
      options.max_entries_per_input = 6;
      options.seed = seed;
      s.results.push_back(gradcheck("model_" + std::string(scheme_name(kind)),
                                    [&] { return charbonnier_loss(forward_sequence(lr_seq, params), target); },
                                    inputs, options));
    }
  }

  GradcheckReport report;
  report.results = std::move(s.results);
  const Tensor x = s.input({3});
  report.corrupted = gradcheck("corrupted_rule", [&] { return sum(corrupted_square(x)); }, {x});
  return report;
}

GradcheckReport cmd_gradcheck(const GradcheckOptions& o, std::ostream& out) {
  const GradcheckReport report = gradient_suite(o.seed);
  std::ostringstream table;
  table << "op,max_rel_error,entries,status\n";
  for (const auto& r : report.results)
    table << r.name << ',' << r.max_rel_error << ',' << r.entries_checked << ',' << (r.passed ? "pass" : "FAIL") << '\n';
  table << "selftest:" << report.corrupted.name << ',' << report.corrupted.max_rel_error << ','
        << report.corrupted.entries_checked << ',' << (report.corrupted.passed ? "MISSED" : "detected") << '\n';
  out << table.str();
  if (!o.output.empty()) {
    std::ofstream f(o.output);
    if (!f) throw CommandError("gradcheck: cannot write " + o.output.string());
    f << table.str();
  }
  return report;
}

}  // namespace ftvsr::tools
