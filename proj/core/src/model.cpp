#include "ftvsr/model.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "ftvsr/dct.hpp"
#include "ftvsr/imaging.hpp"
#include "ftvsr/tokenizer.hpp"

namespace ftvsr {

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("model config: " + what); };
  if (channels == 0) fail("channels must be positive");
  if (scale == 0) fail("scale must be at least 1");
  if (block == 0) fail("block size must be positive");
  if (token_block == 0) fail("token block must be positive");
  if (model_dim == 0 || heads == 0 || model_dim % heads != 0) fail("model_dim must be a positive multiple of heads");
  if (hidden_channels == 0) fail("hidden_channels must be positive");
  if (upsampler_width == 0) fail("upsampler_width must be positive");
  if (attention == AttentionKind::kDual && token_width() % 2 != 0)
    fail("dual attention needs an even token width, got " + std::to_string(token_width()));
}

KeyValues ModelConfig::to_key_values() const {
  return {{"channels", std::to_string(channels)},
          {"scale", std::to_string(scale)},
          {"block", std::to_string(block)},
          {"token_block", std::to_string(token_block)},
          {"model_dim", std::to_string(model_dim)},
          {"heads", std::to_string(heads)},
          {"hidden_channels", std::to_string(hidden_channels)},
          {"upsampler_width", std::to_string(upsampler_width)},
          {"scheme", std::string(scheme_name(scheme))},
          {"attention", std::string(attention_kind_name(attention))},
          {"feed_forward", feed_forward ? "true" : "false"},
          {"frequency_fusion", frequency_fusion ? "true" : "false"},
          {"zero_init_output", zero_init_output ? "true" : "false"},
          {"seed", std::to_string(seed)}};
}

ModelConfig ModelConfig::from_key_values(const std::map<std::string, std::string>& values) {
  ModelConfig c;
  c.channels = require_size(values, "channels");
  c.scale = require_size(values, "scale");
  c.block = require_size(values, "block");
  c.token_block = require_size(values, "token_block");
  c.model_dim = require_size(values, "model_dim");
  c.heads = require_size(values, "heads");
  c.hidden_channels = require_size(values, "hidden_channels");
  c.upsampler_width = require_size(values, "upsampler_width");
  c.scheme = parse_scheme(require_key(values, "scheme"));
  c.attention = parse_attention_kind(require_key(values, "attention"));
  c.feed_forward = require_key(values, "feed_forward") == "true";
  c.frequency_fusion = require_key(values, "frequency_fusion") == "true";
  c.zero_init_output = require_key(values, "zero_init_output") == "true";
  c.seed = require_size(values, "seed");
  c.validate();
  return c;
}

namespace {

Tensor uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  ModelParams p;
  p.config = config;
  const std::size_t c = config.channels, uw = config.upsampler_width;
  const std::size_t w = config.token_width(), wh = config.hidden_token_width(), d = config.model_dim;
  p.up_w1 = uniform({uw, c, 3, 3}, c * 9, rng);
  p.up_b1 = Tensor::zeros({uw}, true);
  p.up_w2 = config.zero_init_output ? Tensor::zeros({c, uw, 3, 3}, true) : uniform({c, uw, 3, 3}, uw * 9, rng);
  p.up_b2 = Tensor::zeros({c}, true);
  p.hidden_embed = uniform({wh, w}, wh, rng);

  const AttentionConfig from_tokens{w, w, d, config.heads, d, config.feed_forward};
  const AttentionConfig from_attention{d, w, d, config.heads, d, config.feed_forward};
  switch (config.scheme) {
    case SchemeKind::kSpace:
    case SchemeKind::kTime:
    case SchemeKind::kJoint:
      p.attention.primary = AttentionUnit::random(config.attention, from_tokens, rng);
      break;
    case SchemeKind::kSpaceTime:
      p.attention.primary = AttentionUnit::random(config.attention, from_tokens, rng);
      p.attention.secondary = AttentionUnit::random(config.attention, from_attention, rng);
      break;
    case SchemeKind::kTimeSpace:
      p.attention.secondary = AttentionUnit::random(config.attention, from_tokens, rng);
      p.attention.primary = AttentionUnit::random(config.attention, from_attention, rng);
      break;
  }
  Shape fuse_shape = {d + w, w};
  if (config.frequency_fusion) fuse_shape.insert(fuse_shape.begin(), config.block * config.block);
  p.fuse_w = config.zero_init_output ? Tensor::zeros(fuse_shape, true) : uniform(fuse_shape, d + w, rng);
  p.hidden_w = uniform({d + w, wh}, d + w, rng);
  return p;
}

NamedTensors ModelParams::named() const {
  NamedTensors out = {{"upsampler.w1", up_w1}, {"upsampler.b1", up_b1}, {"upsampler.w2", up_w2},
                      {"upsampler.b2", up_b2}, {"hidden.embed", hidden_embed}};
  attention.primary.collect("attention.primary", out);
  if (is_divided(config.scheme)) attention.secondary.collect("attention.secondary", out);
  out.emplace_back("fusion.w", fuse_w);
  out.emplace_back("hidden.update", hidden_w);
  return out;
}

void ModelParams::load(const NamedTensors& tensors) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : tensors) by_name[name] = &t;
  for (auto [name, target] : named()) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint is missing parameter '" + name + "'");
    if (it->second->shape() != target.shape())
      throw std::runtime_error("checkpoint parameter '" + name + "' has shape " + shape_to_string(it->second->shape()) +
                               ", expected " + shape_to_string(target.shape()));
    auto src = it->second->data();
    std::copy(src.begin(), src.end(), target.mutable_data().begin());
  }
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t.numel();
  return n;
}

HiddenState initial_state(const ModelParams& params, std::size_t lr_height, std::size_t lr_width) {
  const auto& c = params.config;
  return {Tensor::zeros({c.hidden_channels, lr_height * c.scale, lr_width * c.scale}), 0};
}

Tensor zero_flow(std::size_t height, std::size_t width) { return Tensor::zeros({2, height, width}); }

Tensor upsample_phi(const Tensor& lr, const ModelParams& params) {
  if (lr.rank() != 4 || lr.numel() == 0) throw std::invalid_argument("upsample_phi: expected non-empty [T x C x H x W]");
  const Tensor base = bicubic(lr, params.config.scale);
  const Tensor hidden = tanh(conv2d(base, params.up_w1, params.up_b1));
  return add(base, conv2d(hidden, params.up_w2, params.up_b2));
}

namespace {

Tensor token_rows(const Tensor& grid) { return reshape(grid, {grid.dim(0) * grid.dim(1) * grid.dim(2), grid.dim(3)}); }

// x [N x F x in] times w [F x in x out] per frequency -> [N x F x out].
Tensor per_frequency_linear(const Tensor& x, const Tensor& w) {
  const std::size_t n = x.dim(0), f = x.dim(1), in = x.dim(2), out = w.dim(2);
  std::vector<Tensor> parts;
  for (std::size_t k = 0; k < f; ++k) {
    const Tensor xf = reshape(slice(x, 1, k, 1), {n, in});
    const Tensor wf = reshape(slice(w, 0, k, 1), {in, out});
    parts.push_back(reshape(matmul(xf, wf), {n, 1, out}));
  }
  return concat(parts, 1);
}

void require_finite(const Tensor& t, const char* what) {
  for (double v : t.data())
    if (!std::isfinite(v)) throw std::domain_error(std::string("forward_frame: non-finite values in ") + what);
}

}  // namespace

FrameOutput forward_frame(const Tensor& lr_seq, std::size_t t, const HiddenState& state, const ModelParams& params,
                          const Tensor& flow) {
  const auto& cfg = params.config;
  if (lr_seq.rank() != 4 || lr_seq.dim(1) != cfg.channels)
    throw std::invalid_argument("forward_frame: expected lr sequence [T x " + std::to_string(cfg.channels) +
                                " x H x W], got " + shape_to_string(lr_seq.shape()));
  if (t >= lr_seq.dim(0)) throw std::out_of_range("forward_frame: frame index outside the sequence");
  const std::size_t out_h = lr_seq.dim(2) * cfg.scale, out_w = lr_seq.dim(3) * cfg.scale;
  if (state.features.shape() != Shape{cfg.hidden_channels, out_h, out_w})
    throw std::invalid_argument("forward_frame: hidden state " + shape_to_string(state.features.shape()) +
                                " does not match the upsampled frame");
  require_finite(lr_seq, "the input frames");
  require_finite(state.features, "the hidden state");

  const std::size_t b = cfg.block, k = cfg.token_block, align = b * k;
  const Tensor lr_t = slice(lr_seq, 0, t, 1);
  const Tensor bic = bicubic(lr_t, cfg.scale);
  const Tensor phi = add(bic, conv2d(tanh(conv2d(bic, params.up_w1, params.up_b1)), params.up_w2, params.up_b2));

  const SpectralMap query_map = to_spectral(bic, b, align);
  const SpectralMap lr_map = to_spectral(phi, b, align);
  const Tensor queries = tokens_from_spectral(query_map.data, k);
  const Tensor features = tokens_from_spectral(lr_map.data, k);
  const std::size_t n = features.dim(1), f = features.dim(2), w = features.dim(3);
  const std::size_t rows = lr_map.rows() / k, cols = lr_map.cols() / k;

  const Tensor flow_field = flow.defined() ? flow : zero_flow(out_h, out_w);
  const Tensor warped = warp(state.features, flow_field);
  const SpectralMap hidden_map = to_spectral(reshape(warped, {1, cfg.hidden_channels, out_h, out_w}), b, align);
  const Tensor hidden_tokens = tokens_from_spectral(hidden_map.data, k);
  const Tensor hidden_kv = reshape(matmul(token_rows(hidden_tokens), params.hidden_embed), {1, n, f, w});

  const auto& units = params.attention;
  Tensor combined;  // A in the fusion input
  Tensor temporal;  // feeds the hidden-state update
  switch (cfg.scheme) {
    case SchemeKind::kSpace:
      combined = temporal = space_attention(queries, features, units.primary);
      break;
    case SchemeKind::kTime:
      combined = temporal = time_attention(queries, concat({features, hidden_kv}, 0), units.primary, false);
      break;
    case SchemeKind::kJoint:
      combined = temporal = joint_attention(queries, concat({features, hidden_kv}, 0), units.primary);
      break;
    case SchemeKind::kSpaceTime: {
      const Tensor spatial = space_attention(queries, features, units.primary);
      temporal = time_attention(spatial, hidden_kv, units.secondary, false);
      combined = add(temporal, spatial);
      break;
    }
    case SchemeKind::kTimeSpace: {
      const Tensor time_first = time_attention(queries, hidden_kv, units.secondary, false);
      temporal = space_attention(time_first, features, units.primary);
      combined = add(temporal, time_first);
      break;
    }
  }

  const Tensor feature_rows = token_rows(features);
  const Tensor fusion_in = concat({token_rows(combined), feature_rows}, 1);
  const Tensor fused = cfg.frequency_fusion
                           ? per_frequency_linear(reshape(fusion_in, {n, f, fusion_in.dim(1)}), params.fuse_w)
                           : matmul(fusion_in, params.fuse_w);
  // rDCT(fused + D) = rDCT(fused) + phi, since the inverse transform is
  // linear and rDCT(D) with padding removed is phi itself.
  SpectralMap residual_map = lr_map;
  residual_map.data = spectral_from_tokens(reshape(fused, {1, n, f, w}), cfg.channels, k, rows, cols);
  const Tensor sr = add(phi, from_spectral(residual_map));

  const Tensor hidden_rows = matmul(concat({token_rows(temporal), feature_rows}, 1), params.hidden_w);
  SpectralMap next_map = hidden_map;
  next_map.data = spectral_from_tokens(reshape(hidden_rows, {1, n, f, cfg.hidden_token_width()}),
                                       cfg.hidden_channels, k, rows, cols);
  const Tensor next_hidden = from_spectral(next_map);

  FrameOutput out;
  out.sr = reshape(sr, {cfg.channels, out_h, out_w});
  out.state = {reshape(next_hidden, {cfg.hidden_channels, out_h, out_w}), state.frame_index + 1};
  return out;
}

Tensor forward_sequence(const Tensor& lr_seq, const ModelParams& params, const std::vector<Tensor>& flows) {
  if (lr_seq.rank() != 4 || lr_seq.dim(0) == 0) throw std::invalid_argument("forward_sequence: empty sequence");
  if (!flows.empty() && flows.size() != lr_seq.dim(0))
    throw std::invalid_argument("forward_sequence: need one flow field per frame");
  HiddenState state = initial_state(params, lr_seq.dim(2), lr_seq.dim(3));
  std::vector<Tensor> frames;
  for (std::size_t t = 0; t < lr_seq.dim(0); ++t) {
    auto out = forward_frame(lr_seq, t, state, params, flows.empty() ? Tensor() : flows[t]);
    const auto& s = out.sr.shape();
    frames.push_back(reshape(out.sr, {1, s[0], s[1], s[2]}));
    state = std::move(out.state);
  }
  return concat(frames, 0);
}

Tensor charbonnier_loss(const Tensor& sr, const Tensor& hr, double epsilon) {
  if (sr.shape() != hr.shape())
    throw std::invalid_argument("charbonnier_loss: shape mismatch " + shape_to_string(sr.shape()) + " vs " +
                                shape_to_string(hr.shape()));
  if (sr.rank() == 0 || sr.dim(0) == 0) throw std::invalid_argument("charbonnier_loss: empty sequence");
  const std::size_t frames = sr.dim(0);
  const Tensor diff = sub(hr, sr);
  const Tensor per_frame = sum(reshape(mul(diff, diff), {frames, sr.numel() / frames}), 1);
  return mean(sqrt(add_scalar(per_frame, epsilon * epsilon)));
}

void Adam::step(const NamedTensors& params, double learning_rate) {
  ++steps_;
  const double correction1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  for (auto [name, param] : params) {
    auto& m = first_[name];
    auto& v = second_[name];
    m.resize(param.numel(), 0.0);
    v.resize(param.numel(), 0.0);
    if (!param.has_grad()) continue;
    auto g = param.grad();
    auto x = param.mutable_data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g[i];
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      x[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

NamedTensors Adam::state() const {
  NamedTensors out;
  for (const auto& [name, m] : first_) out.emplace_back("m." + name, Tensor::from({m.size()}, m));
  for (const auto& [name, v] : second_) out.emplace_back("v." + name, Tensor::from({v.size()}, v));
  return out;
}

void Adam::load_state(const NamedTensors& state, std::size_t steps) {
  first_.clear();
  second_.clear();
  for (const auto& [name, t] : state) {
    const std::vector<double> values(t.data().begin(), t.data().end());
    if (name.rfind("m.", 0) == 0) {
      first_[name.substr(2)] = values;
    } else if (name.rfind("v.", 0) == 0) {
      second_[name.substr(2)] = values;
    } else {
      throw std::runtime_error("unexpected optimizer entry '" + name + "'");
    }
  }
  steps_ = steps;
}

double cosine_learning_rate(double base, double minimum, std::size_t step, std::size_t total) {
  if (total == 0) return base;
  const double progress = std::min(1.0, static_cast<double>(step) / static_cast<double>(total));
  return minimum + (base - minimum) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double train_step(const std::vector<Clip>& batch, ModelParams& params, Adam& optimizer, double learning_rate) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  const auto named = params.named();
  for (auto [name, t] : named) t.zero_grad();
  Tensor loss;
  try {
    std::vector<Tensor> losses;
    for (const auto& clip : batch) losses.push_back(charbonnier_loss(forward_sequence(clip.lr, params), clip.hr));
    loss = losses.size() == 1 ? losses.front() : mean(concat([&] {
      std::vector<Tensor> r;
      for (auto& l : losses) r.push_back(reshape(l, {1}));
      return r;
    }(), 0));
    backward(loss);
  } catch (const std::domain_error& e) {
    throw TrainingError(std::string("non-finite value during training step: ") + e.what());
  }
  for (const auto& [name, t] : named) {
    if (!t.has_grad()) continue;
    for (double g : t.grad())
      if (!std::isfinite(g)) throw TrainingError("non-finite gradient for parameter '" + name + "'");
  }
  optimizer.step(named, learning_rate);
  return loss.item();
}

Tensor dihedral(const Tensor& frames, unsigned code) {
  if (frames.rank() < 2) throw std::invalid_argument("dihedral: expected at least two axes");
  NoGradGuard no_grad;
  const std::size_t r = frames.rank();
  const std::size_t h = frames.dim(r - 2), w = frames.dim(r - 1);
  const bool transpose = code & 4u, flip_rows = code & 2u, flip_cols = code & 1u;
  const std::size_t oh = transpose ? w : h, ow = transpose ? h : w;
  const std::size_t planes = frames.numel() / (h * w);
  std::vector<std::size_t> index(frames.numel());
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        const std::size_t sy = flip_rows ? oh - 1 - y : y;
        const std::size_t sx = flip_cols ? ow - 1 - x : x;
        const std::size_t src_y = transpose ? sx : sy, src_x = transpose ? sy : sx;
        index[(p * oh + y) * ow + x] = (p * h + src_y) * w + src_x;
      }
  Shape shape = frames.shape();
  shape[r - 2] = oh;
  shape[r - 1] = ow;
  return gather(frames.detach(), std::move(index), std::move(shape));
}

Clip dihedral(const Clip& clip, unsigned code) { return {dihedral(clip.lr, code), dihedral(clip.hr, code)}; }

void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params, const Adam& optimizer,
                     std::size_t step) {
  std::filesystem::create_directories(dir);
  write_key_values(dir / "model.txt", params.config.to_key_values());
  write_tensor_dir(dir / "params", params.named());
  write_tensor_dir(dir / "optimizer", optimizer.state());
  write_key_values(dir / "state.txt", {{"step", std::to_string(step)}, {"adam_steps", std::to_string(optimizer.steps())}});
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "model.txt"))
    throw std::runtime_error("no checkpoint at " + dir.string() + " (model.txt not found)");
  const auto config = ModelConfig::from_key_values(read_key_values(dir / "model.txt"));
  const auto state = read_key_values(dir / "state.txt");
  Checkpoint ckpt{ModelParams::init(config), Adam(), require_size(state, "step")};
  ckpt.params.load(read_tensor_dir(dir / "params"));
  ckpt.optimizer.load_state(read_tensor_dir(dir / "optimizer"), require_size(state, "adam_steps"));
  return ckpt;
}

}  // namespace ftvsr
