#include "ftvsr/tokenizer.hpp"

#include <stdexcept>
#include <string>

namespace ftvsr {

Tensor tokens_from_spectral(const Tensor& spectral, std::size_t token_block) {
  if (spectral.rank() != 5) throw std::invalid_argument("tokenize: expected spectral [T x F x C x R x Cc], got " + shape_to_string(spectral.shape()));
  const auto& s = spectral.shape();
  const std::size_t k = token_block;
  if (k == 0 || s[3] % k != 0 || s[4] % k != 0) {
    throw std::invalid_argument("tokenize: token block " + std::to_string(k) + " does not divide spectral extents " +
                                std::to_string(s[3]) + "x" + std::to_string(s[4]));
  }
  const std::size_t t = s[0], f = s[1], c = s[2], br = s[3] / k, bc = s[4] / k;
  // [T, F, C, br, K, bc, K] -> [T, br, bc, F, C, K, K]
  Tensor x = reshape(spectral, {t, f, c, br, k, bc, k});
  x = permute(x, {0, 3, 5, 1, 2, 4, 6});
  return reshape(x, {t, br * bc, f, c * k * k});
}

Tensor spectral_from_tokens(const Tensor& tokens, std::size_t channels, std::size_t token_block,
                            std::size_t block_rows, std::size_t block_cols) {
  const std::size_t k = token_block;
  if (tokens.rank() != 4 || tokens.dim(1) != block_rows * block_cols || tokens.dim(3) != channels * k * k) {
    throw std::invalid_argument("detokenize: token tensor " + shape_to_string(tokens.shape()) +
                                " does not match the recorded geometry");
  }
  const std::size_t t = tokens.dim(0), f = tokens.dim(2);
  Tensor x = reshape(tokens, {t, block_rows, block_cols, f, channels, k, k});
  x = permute(x, {0, 3, 4, 1, 5, 2, 6});
  return reshape(x, {t, f, channels, block_rows * k, block_cols * k});
}

TokenGrid tokenize(const SpectralMap& map, std::size_t token_block) {
  TokenGrid grid;
  grid.tokens = tokens_from_spectral(map.data, token_block);
  grid.token_block = token_block;
  grid.channels = map.channels();
  grid.block_rows = map.rows() / token_block;
  grid.block_cols = map.cols() / token_block;
  grid.origin = map;
  return grid;
}

SpectralMap detokenize(const TokenGrid& grid) {
  SpectralMap map = grid.origin;
  map.data = spectral_from_tokens(grid.tokens, grid.channels, grid.token_block, grid.block_rows, grid.block_cols);
  if (map.data.dim(1) != map.block * map.block || map.data.dim(3) * map.block != map.padded_height ||
      map.data.dim(4) * map.block != map.padded_width) {
    throw std::invalid_argument("detokenize: tokens do not match origin geometry");
  }
  return map;
}

QkvSets build_qkv(const TokenGrid& grid, std::size_t target_frame) {
  const std::size_t frames = grid.frames();
  if (frames < 1) throw std::invalid_argument("build_qkv: grid has no frames");
  if (target_frame < 1 || target_frame > frames) {
    throw std::invalid_argument("build_qkv: target frame " + std::to_string(target_frame) + " outside [1, " +
                                std::to_string(frames) + "]");
  }
  const std::size_t per_frame = grid.block_count() * grid.frequencies();
  const std::size_t width = grid.width();
  const Tensor flat = reshape(grid.tokens, {frames * per_frame, width});
  QkvSets sets;
  sets.queries = slice(flat, 0, (target_frame - 1) * per_frame, per_frame);
  std::vector<Tensor> others;
  for (std::size_t t = 0; t < frames; ++t) {
    if (t + 1 != target_frame) others.push_back(slice(flat, 0, t * per_frame, per_frame));
  }
  sets.keys = others.empty() ? Tensor::zeros({0, width}) : concat(others, 0);
  sets.values = sets.keys;
  return sets;
}

}  // namespace ftvsr
