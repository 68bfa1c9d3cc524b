#pragma once

#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ftvsr/attention.hpp"

namespace ftvsr {

// sf: space-frequency, tf: time-frequency, joint: all tokens at once,
// ts / st: divided, time first / space first.
enum class SchemeKind { kSpace, kTime, kJoint, kTimeSpace, kSpaceTime };
enum class AttentionKind { kFrequency, kDual };

SchemeKind parse_scheme(std::string_view name);
std::string_view scheme_name(SchemeKind kind);
AttentionKind parse_attention_kind(std::string_view name);
std::string_view attention_kind_name(AttentionKind kind);
bool is_divided(SchemeKind kind);

// The attention block used at one stage: plain frequency attention or DFA.
struct AttentionUnit {
  AttentionKind kind = AttentionKind::kFrequency;
  AttentionLayer layer;  // kFrequency
  DualAttention dual;    // kDual

  static AttentionUnit frequency(AttentionLayer layer);
  static AttentionUnit dual_unit(DualAttention dual);
  static AttentionUnit random(AttentionKind kind, const AttentionConfig& config, std::mt19937_64& rng);

  const AttentionLayer& main() const { return kind == AttentionKind::kDual ? dual.main : layer; }
  void collect(const std::string& prefix, NamedTensors& out) const;
};

// Runs `unit` with a grouping plan; DFA units first transform the key/value grid.
Tensor apply_unit(const Tensor& q, const Tensor& kv, const AttentionUnit& unit,
                  const std::vector<AttentionGroup>& plan, AttentionTrace* trace = nullptr);

// Grouping plans over q [Tq x N x F] and kv [Tk x N x F] token grids.
std::vector<AttentionGroup> space_plan(std::size_t frames, std::size_t blocks, std::size_t freqs);
std::vector<AttentionGroup> time_plan(std::size_t query_frames, std::size_t kv_frames, std::size_t blocks,
                                      std::size_t freqs, bool exclude_own_frame);
std::vector<AttentionGroup> joint_plan(std::size_t query_frames, std::size_t kv_frames, std::size_t blocks,
                                       std::size_t freqs);

// Stage forms with separate query and key/value grids.
// Space: frame t queries attend to the N*F tokens of kv frame t.
Tensor space_attention(const Tensor& q, const Tensor& kv, const AttentionUnit& unit, AttentionTrace* trace = nullptr);
// Time: block-i queries attend to the F tokens of block i in every kv frame,
// or in every other frame when exclude_own_frame is set (requires Tq == Tk).
Tensor time_attention(const Tensor& q, const Tensor& kv, const AttentionUnit& unit, bool exclude_own_frame,
                      AttentionTrace* trace = nullptr);
Tensor joint_attention(const Tensor& q, const Tensor& kv, const AttentionUnit& unit, AttentionTrace* trace = nullptr);

// Self-attention schemes over one grid [T x N x F x w].
Tensor attend_sf(const Tensor& grid, const AttentionUnit& unit, AttentionTrace* trace = nullptr);
Tensor attend_tf(const Tensor& grid, const AttentionUnit& unit, AttentionTrace* trace = nullptr);
Tensor attend_joint(const Tensor& grid, const AttentionUnit& unit, AttentionTrace* trace = nullptr);
// The first stage's output becomes the queries of the second; keys and
// values of both stages come from the un-attended grid. The time stage
// attends to the other frames only and is skipped when T == 1.
Tensor attend_divided(const Tensor& grid, SchemeKind order, const AttentionUnit& space_unit,
                      const AttentionUnit& time_unit, AttentionTrace* trace = nullptr);

struct SchemeUnits {
  AttentionUnit primary;    // single-stage schemes and the space stage
  AttentionUnit secondary;  // time stage of divided schemes
};

Tensor attend_scheme(const Tensor& grid, SchemeKind kind, const SchemeUnits& units, AttentionTrace* trace = nullptr);
TokenGrid attend_scheme(const TokenGrid& grid, SchemeKind kind, const SchemeUnits& units,
                        AttentionTrace* trace = nullptr);

}  // namespace ftvsr
