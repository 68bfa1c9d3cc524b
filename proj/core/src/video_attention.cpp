#include "ftvsr/video_attention.hpp"

#include <stdexcept>
#include <string>

namespace ftvsr {

SchemeKind parse_scheme(std::string_view name) {
  if (name == "sf") return SchemeKind::kSpace;
  if (name == "tf") return SchemeKind::kTime;
  if (name == "joint") return SchemeKind::kJoint;
  if (name == "ts") return SchemeKind::kTimeSpace;
  if (name == "st") return SchemeKind::kSpaceTime;
  throw std::invalid_argument("unknown scheme '" + std::string(name) + "' (expected sf, tf, joint, ts or st)");
}

std::string_view scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::kSpace: return "sf";
    case SchemeKind::kTime: return "tf";
    case SchemeKind::kJoint: return "joint";
    case SchemeKind::kTimeSpace: return "ts";
    case SchemeKind::kSpaceTime: return "st";
  }
  return "?";
}

AttentionKind parse_attention_kind(std::string_view name) {
  if (name == "fa") return AttentionKind::kFrequency;
  if (name == "dfa") return AttentionKind::kDual;
  throw std::invalid_argument("unknown attention '" + std::string(name) + "' (expected fa or dfa)");
}

std::string_view attention_kind_name(AttentionKind kind) { return kind == AttentionKind::kDual ? "dfa" : "fa"; }

bool is_divided(SchemeKind kind) { return kind == SchemeKind::kTimeSpace || kind == SchemeKind::kSpaceTime; }

AttentionUnit AttentionUnit::frequency(AttentionLayer layer) {
  AttentionUnit unit;
  unit.kind = AttentionKind::kFrequency;
  unit.layer = std::move(layer);
  return unit;
}

AttentionUnit AttentionUnit::dual_unit(DualAttention dual) {
  AttentionUnit unit;
  unit.kind = AttentionKind::kDual;
  unit.dual = std::move(dual);
  return unit;
}

AttentionUnit AttentionUnit::random(AttentionKind kind, const AttentionConfig& config, std::mt19937_64& rng) {
  return kind == AttentionKind::kDual ? dual_unit(DualAttention::random(config, rng))
                                      : frequency(AttentionLayer::random(config, rng));
}

void AttentionUnit::collect(const std::string& prefix, NamedTensors& out) const {
  if (kind == AttentionKind::kDual) {
    dual.collect(prefix, out);
  } else {
    layer.collect(prefix, out);
  }
}

Tensor apply_unit(const Tensor& q, const Tensor& kv, const AttentionUnit& unit,
                  const std::vector<AttentionGroup>& plan, AttentionTrace* trace) {
  if (unit.kind == AttentionKind::kDual) {
    const Tensor transformed = dual_branches(kv, unit.dual);
    return attend_with_plan(q, transformed, transformed, unit.dual.main, plan, trace);
  }
  return attend_with_plan(q, kv, kv, unit.layer, plan, trace);
}

std::vector<AttentionGroup> space_plan(std::size_t frames, std::size_t blocks, std::size_t freqs) {
  return local_plan(frames, blocks, freqs);
}

std::vector<AttentionGroup> time_plan(std::size_t query_frames, std::size_t kv_frames, std::size_t blocks,
                                      std::size_t freqs, bool exclude_own_frame) {
  std::vector<AttentionGroup> plan;
  if (exclude_own_frame) {
    if (query_frames != kv_frames) throw std::invalid_argument("time attention: own-frame exclusion needs Tq == Tk");
    for (std::size_t t = 0; t < query_frames; ++t)
      for (std::size_t i = 0; i < blocks; ++i) {
        AttentionGroup group;
        for (std::size_t f = 0; f < freqs; ++f) group.queries.push_back({token_row(t, i, f, blocks, freqs)});
        for (std::size_t s = 0; s < kv_frames; ++s) {
          if (s == t) continue;
          for (std::size_t f = 0; f < freqs; ++f) group.keys.push_back({token_row(s, i, f, blocks, freqs)});
        }
        plan.push_back(std::move(group));
      }
    return plan;
  }
  for (std::size_t i = 0; i < blocks; ++i) {
    AttentionGroup group;
    for (std::size_t t = 0; t < query_frames; ++t)
      for (std::size_t f = 0; f < freqs; ++f) group.queries.push_back({token_row(t, i, f, blocks, freqs)});
    for (std::size_t s = 0; s < kv_frames; ++s)
      for (std::size_t f = 0; f < freqs; ++f) group.keys.push_back({token_row(s, i, f, blocks, freqs)});
    plan.push_back(std::move(group));
  }
  return plan;
}

std::vector<AttentionGroup> joint_plan(std::size_t query_frames, std::size_t kv_frames, std::size_t blocks,
                                       std::size_t freqs) {
  AttentionGroup group;
  for (std::size_t r = 0; r < query_frames * blocks * freqs; ++r) group.queries.push_back({r});
  for (std::size_t r = 0; r < kv_frames * blocks * freqs; ++r) group.keys.push_back({r});
  return {group};
}

namespace {

void check_grids(const Tensor& q, const Tensor& kv, const char* op) {
  if (q.rank() != 4 || kv.rank() != 4) throw std::invalid_argument(std::string(op) + ": expected token grids");
  if (q.numel() == 0 || kv.numel() == 0) throw std::invalid_argument(std::string(op) + ": empty grid");
  if (q.dim(1) != kv.dim(1) || q.dim(2) != kv.dim(2))
    throw std::invalid_argument(std::string(op) + ": query and key/value grids differ in block or frequency count");
}

}  // namespace

Tensor space_attention(const Tensor& q, const Tensor& kv, const AttentionUnit& unit, AttentionTrace* trace) {
  check_grids(q, kv, "space attention");
  if (q.dim(0) != kv.dim(0)) throw std::invalid_argument("space attention: frame counts differ");
  return apply_unit(q, kv, unit, space_plan(q.dim(0), q.dim(1), q.dim(2)), trace);
}

Tensor time_attention(const Tensor& q, const Tensor& kv, const AttentionUnit& unit, bool exclude_own_frame,
                      AttentionTrace* trace) {
  check_grids(q, kv, "time attention");
  if (exclude_own_frame && kv.dim(0) < 2) throw std::invalid_argument("time attention: no other frames to attend to");
  return apply_unit(q, kv, unit, time_plan(q.dim(0), kv.dim(0), q.dim(1), q.dim(2), exclude_own_frame), trace);
}

Tensor joint_attention(const Tensor& q, const Tensor& kv, const AttentionUnit& unit, AttentionTrace* trace) {
  check_grids(q, kv, "joint attention");
  return apply_unit(q, kv, unit, joint_plan(q.dim(0), kv.dim(0), q.dim(1), q.dim(2)), trace);
}

Tensor attend_sf(const Tensor& grid, const AttentionUnit& unit, AttentionTrace* trace) {
  return space_attention(grid, grid, unit, trace);
}

Tensor attend_tf(const Tensor& grid, const AttentionUnit& unit, AttentionTrace* trace) {
  return time_attention(grid, grid, unit, false, trace);
}

Tensor attend_joint(const Tensor& grid, const AttentionUnit& unit, AttentionTrace* trace) {
  return joint_attention(grid, grid, unit, trace);
}

Tensor attend_divided(const Tensor& grid, SchemeKind order, const AttentionUnit& space_unit,
                      const AttentionUnit& time_unit, AttentionTrace* trace) {
  if (!is_divided(order)) throw std::invalid_argument("attend_divided: order must be st or ts");
  check_grids(grid, grid, "divided attention");
  const bool single_frame = grid.dim(0) == 1;
  if (order == SchemeKind::kSpaceTime) {
    const Tensor inner = space_attention(grid, grid, space_unit, trace);
    return single_frame ? inner : time_attention(inner, grid, time_unit, true, trace);
  }
  const Tensor inner = single_frame ? grid : time_attention(grid, grid, time_unit, true, trace);
  return space_attention(inner, grid, space_unit, trace);
}

Tensor attend_scheme(const Tensor& grid, SchemeKind kind, const SchemeUnits& units, AttentionTrace* trace) {
  switch (kind) {
    case SchemeKind::kSpace: return attend_sf(grid, units.primary, trace);
    case SchemeKind::kTime: return attend_tf(grid, units.primary, trace);
    case SchemeKind::kJoint: return attend_joint(grid, units.primary, trace);
    case SchemeKind::kTimeSpace:
    case SchemeKind::kSpaceTime: return attend_divided(grid, kind, units.primary, units.secondary, trace);
  }
  throw std::logic_error("attend_scheme: unreachable");
}

TokenGrid attend_scheme(const TokenGrid& grid, SchemeKind kind, const SchemeUnits& units, AttentionTrace* trace) {
  TokenGrid out = grid;
  out.tokens = attend_scheme(grid.tokens, kind, units, trace);
  return out;
}

}  // namespace ftvsr
