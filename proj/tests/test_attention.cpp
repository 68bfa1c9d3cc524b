#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "ftvsr/attention.hpp"
#include "ftvsr/video_attention.hpp"
#include "test_util.hpp"

using namespace ftvsr;
using ftvsr::testing::max_abs_diff;
using ftvsr::testing::random_tensor;

namespace {

AttentionLayer layer(std::size_t w, std::size_t d, std::size_t heads, std::uint64_t seed, bool ffn = false) {
  std::mt19937_64 rng(seed);
  return AttentionLayer::random({w, w, d, heads, w, ffn}, rng);
}

Tensor frame_rows(const Tensor& grid, std::size_t t) {
  const std::size_t n = grid.dim(1), f = grid.dim(2), w = grid.dim(3);
  return reshape(slice(grid, 0, t, 1), {n * f, w});
}

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& order) {
  std::vector<std::size_t> idx;
  const std::size_t w = x.dim(1);
  for (std::size_t r : order)
    for (std::size_t c = 0; c < w; ++c) idx.push_back(r * w + c);
  return gather(x, idx, x.shape());
}

}  // namespace

TEST(Attention, WeightsAreRowStochastic) {
  const Tensor q = random_tensor({5, 4}, 1), k = random_tensor({9, 4}, 2);
  AttentionTrace trace;
  freq_attention(q, k, k, layer(4, 4, 1, 3), &trace);
  multi_head(q, k, k, layer(4, 6, 3, 4), &trace);
  ASSERT_EQ(trace.weights.size(), 4u);
  for (const auto& w : trace.weights)
    for (std::size_t i = 0; i < w.dim(0); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < w.dim(1); ++j) {
        s += w.at({i, j});
        EXPECT_GE(w.at({i, j}), 0.0);
      }
      EXPECT_NEAR(s, 1.0, 1e-10);
    }
}

TEST(Attention, KeyValuePermutationInvariance) {
  const Tensor q = random_tensor({6, 4}, 5), k = random_tensor({8, 4}, 6), v = random_tensor({8, 4}, 7);
  std::vector<std::size_t> order(8);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(8));
  const AttentionLayer l = layer(4, 4, 2, 9);
  EXPECT_LT(max_abs_diff(multi_head(q, k, v, l), multi_head(q, permute_rows(k, order), permute_rows(v, order), l)),
            1e-12);
}

TEST(Attention, SingleKeyReturnsProjectedValue) {
  const Tensor q = random_tensor({3, 4}, 10), k = random_tensor({1, 4}, 11), v = random_tensor({1, 4}, 12);
  const AttentionLayer l = layer(4, 4, 1, 13);
  const Tensor out = freq_attention(q, k, v, l);
  const Tensor expected = matmul(matmul(v, l.w_value), l.w_output);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out.at({i, j}), expected.at({0, j}), 1e-12);
}

TEST(Attention, FreqAttentionMatchesHandComputedExample) {
  // Identity projections, d = 2: scores q.k / sqrt(2).
  const Tensor q = Tensor::from({1, 2}, {1.0, 0.0});
  const Tensor k = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
  const Tensor v = Tensor::from({2, 2}, {2.0, 0.0, 0.0, 4.0});
  const Tensor out = freq_attention(q, k, v, AttentionLayer::identity(2));
  const double a = 1.0 / (1.0 + std::exp(-1.0 / std::sqrt(2.0)));
  EXPECT_NEAR(out.at({0, 0}), 2.0 * a, 1e-14);
  EXPECT_NEAR(out.at({0, 1}), 4.0 * (1.0 - a), 1e-14);
}

TEST(Attention, FusedMultiHeadMatchesComposed) {
  const Tensor grid = random_tensor({1, 3, 4, 6}, 14);
  const AttentionLayer l = layer(6, 8, 2, 15);
  const Tensor fused = lfa(grid, l);
  const Tensor composed = multi_head(frame_rows(grid, 0), frame_rows(grid, 0), frame_rows(grid, 0), l);
  EXPECT_LT(max_abs_diff(reshape(fused, composed.shape()), composed), 1e-12);
}

TEST(Attention, LfaEqualsFlattenedFreqAttentionPerFrame) {
  const Tensor grid = random_tensor({2, 3, 4, 5}, 16);
  const AttentionLayer l = layer(5, 5, 1, 17);
  const Tensor out = lfa(grid, l);
  for (std::size_t t = 0; t < 2; ++t) {
    const Tensor rows = frame_rows(grid, t);
    EXPECT_LT(max_abs_diff(frame_rows(out, t), freq_attention(rows, rows, rows, l)), 1e-12);
  }
}

TEST(Attention, GfaMatchesWholePlaneOracle) {
  const std::size_t n = 3, f = 4, w = 2;
  const Tensor grid = random_tensor({1, n, f, w}, 18);
  const AttentionLayer l = layer(w, w, 1, 19);
  const Tensor out = gfa(grid, l);
  const Tensor rows = frame_rows(grid, 0);
  const Tensor qp = matmul(rows, l.w_query), kp = matmul(rows, l.w_key), vp = matmul(rows, l.w_value);
  for (std::size_t a = 0; a < f; ++a) {
    std::vector<double> s(f);
    double mx = -INFINITY;
    for (std::size_t b = 0; b < f; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < w; ++c) acc += qp.at({i * f + a, c}) * kp.at({i * f + b, c});
      s[b] = acc / std::sqrt(static_cast<double>(n * w));
      mx = std::max(mx, s[b]);
    }
    double z = 0.0;
    for (auto& e : s) z += (e = std::exp(e - mx));
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> mixed(w, 0.0);
      for (std::size_t b = 0; b < f; ++b)
        for (std::size_t c = 0; c < w; ++c) mixed[c] += s[b] / z * vp.at({i * f + b, c});
      for (std::size_t c = 0; c < w; ++c) {
        double o = 0.0;
        for (std::size_t e = 0; e < w; ++e) o += mixed[e] * l.w_output.at({e, c});
        EXPECT_NEAR(out.at({0, i, a, c}), o, 1e-12);
      }
    }
  }
}

TEST(Attention, GfaEqualsLfaForSingleBlock) {
  const Tensor grid = random_tensor({2, 1, 5, 4}, 20);
  const AttentionLayer l = layer(4, 4, 2, 21);
  EXPECT_LT(max_abs_diff(gfa(grid, l), lfa(grid, l)), 1e-12);
}

TEST(Attention, DfaCombineWithIdentityHalvesEqualsFreqAttention) {
  const Tensor q = random_tensor({4, 6}, 22), k = random_tensor({7, 6}, 23), v = random_tensor({7, 6}, 24);
  const AttentionLayer main = layer(6, 6, 1, 25);
  const Tensor out = dfa_combine(q, slice(k, 1, 0, 3), slice(k, 1, 3, 3), slice(v, 1, 0, 3), slice(v, 1, 3, 3), main);
  EXPECT_LT(max_abs_diff(out, freq_attention(q, k, v, main)), 1e-12);
}

TEST(Attention, DfaAttendsToTransformedGrid) {
  std::mt19937_64 rng(26);
  const DualAttention dual = DualAttention::random({4, 4, 4, 1, 4, false}, rng);
  const Tensor q = random_tensor({1, 2, 3, 4}, 27), kv = random_tensor({2, 2, 3, 4}, 28);
  const Tensor t = dual_branches(kv, dual);
  const Tensor out = dfa(q, kv, kv, dual);
  const Tensor kt = reshape(t, {12, 4});
  const Tensor expected = freq_attention(reshape(q, {6, 4}), kt, kt, dual.main);
  EXPECT_LT(max_abs_diff(reshape(out, {6, 4}), expected), 1e-12);
  // Branch halves are independent: GFA on the first half, LFA on the second.
  EXPECT_LT(max_abs_diff(slice(t, 3, 0, 2), gfa(slice(kv, 3, 0, 2), dual.global_branch)), 1e-15);
  EXPECT_LT(max_abs_diff(slice(t, 3, 2, 2), lfa(slice(kv, 3, 2, 2), dual.local_branch)), 1e-15);
  EXPECT_THROW(dual_branches(random_tensor({1, 1, 2, 3}, 29), dual), std::invalid_argument);
}

TEST(Attention, GroupedAttentionValidatesPlan) {
  const Tensor q = random_tensor({3, 2}, 30), k = random_tensor({3, 2}, 31);
  AttentionGroup g;
  g.queries = {{0}, {1}};
  g.keys = {{0}};
  EXPECT_THROW(grouped_attention(q, k, k, {g}, 1), std::invalid_argument);  // row 2 uncovered
  g.queries.push_back({2});
  g.keys.clear();
  EXPECT_THROW(grouped_attention(q, k, k, {g}, 1), std::invalid_argument);  // no keys
}

TEST(Schemes, TimeAttentionExcludingOwnFrameMatchesOracle) {
  const std::size_t t = 3, n = 2, f = 3, w = 4;
  const Tensor grid = random_tensor({t, n, f, w}, 32);
  const AttentionLayer l = layer(w, w, 1, 33);
  const Tensor out = time_attention(grid, grid, AttentionUnit::frequency(l), true);
  const Tensor rows = reshape(grid, {t * n * f, w});
  for (std::size_t tt = 0; tt < t; ++tt)
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::size_t> keys;
      for (std::size_t s = 0; s < t; ++s)
        if (s != tt)
          for (std::size_t ff = 0; ff < f; ++ff) keys.push_back(token_row(s, i, ff, n, f));
      std::vector<std::size_t> kidx, qidx;
      for (auto r : keys)
        for (std::size_t c = 0; c < w; ++c) kidx.push_back(r * w + c);
      for (std::size_t ff = 0; ff < f; ++ff)
        for (std::size_t c = 0; c < w; ++c) qidx.push_back(token_row(tt, i, ff, n, f) * w + c);
      const Tensor kq = gather(rows, kidx, {keys.size(), w});
      const Tensor qq = gather(rows, qidx, {f, w});
      const Tensor expected = freq_attention(qq, kq, kq, l);
      EXPECT_LT(max_abs_diff(reshape(slice(slice(out, 0, tt, 1), 1, i, 1), {f, w}), expected), 1e-12);
    }
}

TEST(Schemes, DegeneracyLattice) {
  std::mt19937_64 rng(34);
  SchemeUnits units;
  units.primary = AttentionUnit::random(AttentionKind::kFrequency, {4, 4, 4, 2, 4, true}, rng);
  units.secondary = AttentionUnit::random(AttentionKind::kFrequency, {4, 4, 4, 2, 4, true}, rng);
  // One frame: every scheme with a space stage reduces to space attention.
  const Tensor one_frame = random_tensor({1, 3, 4, 4}, 35);
  const Tensor sf = attend_scheme(one_frame, SchemeKind::kSpace, units);
  EXPECT_LT(max_abs_diff(attend_scheme(one_frame, SchemeKind::kSpaceTime, units), sf), 1e-12);
  EXPECT_LT(max_abs_diff(attend_scheme(one_frame, SchemeKind::kTimeSpace, units), sf), 1e-12);
  EXPECT_LT(max_abs_diff(attend_scheme(one_frame, SchemeKind::kJoint, units), sf), 1e-12);
  // One block: time attention sees every token, like joint attention.
  const Tensor one_block = random_tensor({3, 1, 4, 4}, 36);
  EXPECT_LT(max_abs_diff(attend_scheme(one_block, SchemeKind::kTime, units),
                         attend_scheme(one_block, SchemeKind::kJoint, units)),
            1e-12);
  // One frame and one block: all five coincide.
  const Tensor tiny = random_tensor({1, 1, 4, 4}, 37);
  const Tensor base = attend_scheme(tiny, SchemeKind::kSpace, units);
  for (auto kind : {SchemeKind::kTime, SchemeKind::kJoint, SchemeKind::kTimeSpace, SchemeKind::kSpaceTime})
    EXPECT_LT(max_abs_diff(attend_scheme(tiny, kind, units), base), 1e-12) << scheme_name(kind);
}

TEST(Schemes, ParseNamesRoundTrip) {
  for (auto name : {"sf", "tf", "joint", "ts", "st"}) EXPECT_EQ(scheme_name(parse_scheme(name)), name);
  EXPECT_THROW(parse_scheme("xx"), std::invalid_argument);
  EXPECT_EQ(attention_kind_name(parse_attention_kind("dfa")), "dfa");
}

TEST(Schemes, DualUnitsRunInEveryScheme) {
  std::mt19937_64 rng(38);
  SchemeUnits units;
  units.primary = AttentionUnit::random(AttentionKind::kDual, {4, 4, 4, 1, 4, false}, rng);
  units.secondary = AttentionUnit::random(AttentionKind::kDual, {4, 4, 4, 1, 4, false}, rng);
  const Tensor grid = random_tensor({2, 2, 3, 4}, 39);
  for (auto kind : {SchemeKind::kSpace, SchemeKind::kTime, SchemeKind::kJoint, SchemeKind::kTimeSpace,
                    SchemeKind::kSpaceTime})
    EXPECT_EQ(attend_scheme(grid, kind, units).shape(), grid.shape());
}
