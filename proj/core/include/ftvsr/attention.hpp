#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "ftvsr/ftt.hpp"
#include "ftvsr/tensor.hpp"
#include "ftvsr/tokenizer.hpp"

namespace ftvsr {

struct AttentionConfig {
  std::size_t query_width = 0;  // width of incoming query tokens
  std::size_t kv_width = 0;     // width of incoming key/value tokens
  std::size_t model_dim = 0;    // d
  std::size_t head_count = 1;   // H, d_k = d / H
  std::size_t output_width = 0;
  // Residual x + tanh(x W1) W2 after the output projection, hidden width 2x.
  bool feed_forward = false;

  std::size_t key_dim() const { return model_dim / head_count; }
  void validate() const;
};

// Learnable projections of one attention layer. No biases.
struct AttentionLayer {
  AttentionConfig config;
  Tensor w_query;   // [query_width x d]
  Tensor w_key;     // [kv_width x d]
  Tensor w_value;   // [kv_width x d]
  Tensor w_output;  // [d x output_width]
  Tensor ffn_in;    // [output_width x 2 output_width], only with feed_forward
  Tensor ffn_out;   // [2 output_width x output_width]

  // Entries uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static AttentionLayer random(const AttentionConfig& config, std::mt19937_64& rng);
  // All projections identity, no feed-forward. For oracle tests.
  static AttentionLayer identity(std::size_t width, std::size_t head_count = 1);

  void collect(const std::string& prefix, NamedTensors& out) const;
};

// One row group of a fused attention call. Each token is a list of L rows of
// the projected matrices (L = 1 for fine-grained tokens, L = N for whole-plane
// tokens); scores sum the row-wise dot products. Every query row must belong
// to exactly one query token across the plan.
struct AttentionGroup {
  std::vector<std::vector<std::size_t>> queries;
  std::vector<std::vector<std::size_t>> keys;
};

// Attention weight matrices captured for inspection, one per group and head.
struct AttentionTrace {
  std::vector<Tensor> weights;
};

// softmax(q Wq (k Wk)^T / sqrt(d)) v Wv, then W_o; single head over the full
// model width. Composed from tensor-core ops.
Tensor freq_attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionLayer& layer,
                      AttentionTrace* trace = nullptr);

// H heads over d_k-wide slices, concatenated, then W_o. Composed from
// tensor-core ops; no feed-forward.
Tensor multi_head(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionLayer& layer,
                  AttentionTrace* trace = nullptr);

// x + tanh(x W1) W2 when the layer has a feed-forward block, else x.
Tensor feed_forward(const Tensor& x, const AttentionLayer& layer);

// Fused multi-head attention over already projected rows, evaluated per group.
// Output has the shape of `queries`.
Tensor grouped_attention(const Tensor& queries, const Tensor& keys, const Tensor& values,
                         const std::vector<AttentionGroup>& plan, std::size_t head_count,
                         AttentionTrace* trace = nullptr);

// Projects grids and runs the plan: out = FFN(grouped(qWq, kWk, vWv) W_o).
// q is [Tq x N x F x wq], k and v are [Tk x Nk x F x wkv]; returns
// [Tq x N x F x output_width].
Tensor attend_with_plan(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionLayer& layer,
                        const std::vector<AttentionGroup>& plan, AttentionTrace* trace = nullptr);

// Row index of token (t, i, f) in a flattened [T x N x F] grid.
inline std::size_t token_row(std::size_t t, std::size_t i, std::size_t f, std::size_t blocks, std::size_t freqs) {
  return (t * blocks + i) * freqs + f;
}

// Per-frame plan over the N*F fine-grained tokens of each frame.
std::vector<AttentionGroup> local_plan(std::size_t frames, std::size_t blocks, std::size_t freqs);
// Per-frame plan over F whole-plane tokens (each spans all N blocks).
std::vector<AttentionGroup> global_plan(std::size_t frames, std::size_t blocks, std::size_t freqs);

// Global frequency attention: self-attention among the F whole-plane tokens
// of each frame (F x F matrix per frame). grid is [T x N x F x w].
Tensor gfa(const Tensor& grid, const AttentionLayer& layer, AttentionTrace* trace = nullptr);
// Local frequency attention: self-attention among all F*N tokens of each
// frame (FN x FN matrix per frame).
Tensor lfa(const Tensor& grid, const AttentionLayer& layer, AttentionTrace* trace = nullptr);

TokenGrid gfa(const TokenGrid& grid, const AttentionLayer& layer, AttentionTrace* trace = nullptr);
TokenGrid lfa(const TokenGrid& grid, const AttentionLayer& layer, AttentionTrace* trace = nullptr);

// Dual frequency attention parameters: the key/value feature width is split
// into equal halves; the first half goes through a GFA branch, the second
// through an LFA branch, and the branch outputs are concatenated back along
// the feature axis before the main attention.
struct DualAttention {
  AttentionLayer global_branch;  // [w/2 -> w/2]
  AttentionLayer local_branch;   // [w/2 -> w/2]
  AttentionLayer main;           // queries vs transformed keys/values

  static DualAttention random(const AttentionConfig& main_config, std::mt19937_64& rng);
  void collect(const std::string& prefix, NamedTensors& out) const;
};

// GFA(first half) ++ LFA(second half) along features. grid is [T x N x F x w].
Tensor dual_branches(const Tensor& grid, const DualAttention& dual);

// Final step of DFA given already transformed halves: attention of every
// query token against the feature-concatenated keys/values.
Tensor dfa_combine(const Tensor& q, const Tensor& k_global, const Tensor& k_local, const Tensor& v_global,
                   const Tensor& v_local, const AttentionLayer& main, AttentionTrace* trace = nullptr);

// Dual frequency attention over grids: every query token attends to every
// transformed key token. Output has q's token layout.
Tensor dfa(const Tensor& q, const Tensor& k, const Tensor& v, const DualAttention& dual,
           AttentionTrace* trace = nullptr);
TokenGrid dfa(const TokenGrid& q, const TokenGrid& k, const TokenGrid& v, const DualAttention& dual,
              AttentionTrace* trace = nullptr);

}  // namespace ftvsr
