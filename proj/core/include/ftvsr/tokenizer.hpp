#pragma once

#include <cstddef>

#include "ftvsr/dct.hpp"
#include "ftvsr/tensor.hpp"

namespace ftvsr {

// Frequency tokens over time, space and frequency.
//
// tokens has shape [T x N x F x (C*K*K)]. Token (t, i, f) is the C x K x K
// slice of frequency plane f over spatial block i = block_row * block_cols +
// block_col, flattened as (channel, row, col).
struct TokenGrid {
  Tensor tokens;
  std::size_t token_block = 0;  // K
  std::size_t channels = 0;     // C
  std::size_t block_rows = 0;
  std::size_t block_cols = 0;
  // Geometry of the spectral map the tokens came from, for detokenize.
  SpectralMap origin;

  std::size_t frames() const { return tokens.dim(0); }
  std::size_t block_count() const { return tokens.dim(1); }
  std::size_t frequencies() const { return tokens.dim(2); }
  std::size_t width() const { return tokens.dim(3); }
};

TokenGrid tokenize(const SpectralMap& map, std::size_t token_block);
SpectralMap detokenize(const TokenGrid& grid);

// Tensor-level forms used inside the model: spectral [T x F x C x R x Cc]
// <-> tokens [T x N x F x C*K*K].
Tensor tokens_from_spectral(const Tensor& spectral, std::size_t token_block);
Tensor spectral_from_tokens(const Tensor& tokens, std::size_t channels, std::size_t token_block,
                            std::size_t block_rows, std::size_t block_cols);

// Queries from one target frame, keys and values from every other frame.
struct QkvSets {
  Tensor queries;  // [N*F x width]
  Tensor keys;     // [(T-1)*N*F x width], ordered (t, i, f)
  Tensor values;
};

// `target_frame` is 1-based.
QkvSets build_qkv(const TokenGrid& grid, std::size_t target_frame);

}  // namespace ftvsr
