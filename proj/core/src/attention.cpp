#include "ftvsr/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace ftvsr {

void AttentionConfig::validate() const {
  if (query_width == 0 || kv_width == 0 || model_dim == 0 || output_width == 0)
    throw std::invalid_argument("AttentionConfig: widths must be positive");
  if (head_count == 0 || model_dim % head_count != 0)
    throw std::invalid_argument("AttentionConfig: model_dim " + std::to_string(model_dim) +
                                " not divisible by head_count " + std::to_string(head_count));
}

namespace {

Tensor uniform_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = dist(rng);
  return Tensor::from({rows, cols}, std::move(v), true);
}

void check_width(const Tensor& t, std::size_t width, const char* what) {
  if (t.rank() != 2 || t.dim(1) != width) {
    throw std::invalid_argument(std::string("attention: ") + what + " " + shape_to_string(t.shape()) +
                                " does not have width " + std::to_string(width));
  }
}

}  // namespace

AttentionLayer AttentionLayer::random(const AttentionConfig& config, std::mt19937_64& rng) {
  config.validate();
  AttentionLayer layer;
  layer.config = config;
  layer.w_query = uniform_matrix(config.query_width, config.model_dim, rng);
  layer.w_key = uniform_matrix(config.kv_width, config.model_dim, rng);
  layer.w_value = uniform_matrix(config.kv_width, config.model_dim, rng);
  layer.w_output = uniform_matrix(config.model_dim, config.output_width, rng);
  if (config.feed_forward) {
    layer.ffn_in = uniform_matrix(config.output_width, 2 * config.output_width, rng);
    layer.ffn_out = uniform_matrix(2 * config.output_width, config.output_width, rng);
  }
  return layer;
}

AttentionLayer AttentionLayer::identity(std::size_t width, std::size_t head_count) {
  AttentionLayer layer;
  layer.config = {width, width, width, head_count, width, false};
  layer.config.validate();
  layer.w_query = Tensor::eye(width, true);
  layer.w_key = Tensor::eye(width, true);
  layer.w_value = Tensor::eye(width, true);
  layer.w_output = Tensor::eye(width, true);
  return layer;
}

void AttentionLayer::collect(const std::string& prefix, NamedTensors& out) const {
  out.emplace_back(prefix + ".w_query", w_query);
  out.emplace_back(prefix + ".w_key", w_key);
  out.emplace_back(prefix + ".w_value", w_value);
  out.emplace_back(prefix + ".w_output", w_output);
  if (config.feed_forward) {
    out.emplace_back(prefix + ".ffn_in", ffn_in);
    out.emplace_back(prefix + ".ffn_out", ffn_out);
  }
}

Tensor freq_attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionLayer& layer,
                      AttentionTrace* trace) {
  const auto& cfg = layer.config;
  check_width(q, cfg.query_width, "queries");
  check_width(k, cfg.kv_width, "keys");
  check_width(v, cfg.kv_width, "values");
  if (k.dim(0) == 0) throw std::invalid_argument("attention: empty key set");
  if (k.dim(0) != v.dim(0)) throw std::invalid_argument("attention: key and value counts differ");
  const Tensor qp = matmul(q, layer.w_query);
  const Tensor kp = matmul(k, layer.w_key);
  const Tensor vp = matmul(v, layer.w_value);
  const Tensor scores = scale(matmul(qp, transpose(kp)), 1.0 / std::sqrt(static_cast<double>(cfg.model_dim)));
  const Tensor weights = softmax(scores, 1);
  if (trace) trace->weights.push_back(weights.detach());
  return matmul(matmul(weights, vp), layer.w_output);
}

Tensor multi_head(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionLayer& layer,
                  AttentionTrace* trace) {
  const auto& cfg = layer.config;
  cfg.validate();
  check_width(q, cfg.query_width, "queries");
  check_width(k, cfg.kv_width, "keys");
  check_width(v, cfg.kv_width, "values");
  if (k.dim(0) == 0) throw std::invalid_argument("attention: empty key set");
  if (k.dim(0) != v.dim(0)) throw std::invalid_argument("attention: key and value counts differ");
  const std::size_t dk = cfg.key_dim();
  const Tensor qp = matmul(q, layer.w_query);
  const Tensor kp = matmul(k, layer.w_key);
  const Tensor vp = matmul(v, layer.w_value);
  std::vector<Tensor> heads;
  for (std::size_t h = 0; h < cfg.head_count; ++h) {
    const Tensor qh = slice(qp, 1, h * dk, dk);
    const Tensor kh = slice(kp, 1, h * dk, dk);
    const Tensor vh = slice(vp, 1, h * dk, dk);
    const Tensor weights = softmax(scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dk))), 1);
    if (trace) trace->weights.push_back(weights.detach());
    heads.push_back(matmul(weights, vh));
  }
  return matmul(concat(heads, 1), layer.w_output);
}

Tensor feed_forward(const Tensor& x, const AttentionLayer& layer) {
  if (!layer.config.feed_forward) return x;
  return add(x, matmul(tanh(matmul(x, layer.ffn_in)), layer.ffn_out));
}

namespace {

// Dense helpers on raw row-major buffers.
void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k);

// c[m x n] = a[m x k] * b[n x k]^T
void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
  thread_local std::vector<double> bt;
  bt.resize(n * k);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  matmul_nn(a, bt.data(), c, m, n, k);
}

// c[m x n] = a[m x k] * b[k x n]
void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
  std::fill(c, c + m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* __restrict crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = a[i * k + p];
      const double* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

// c[k x n] = a[m x k]^T * b[m x n]
void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
  std::fill(c, c + k * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* __restrict brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = a[i * k + p];
      double* __restrict crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

// Copies the head-h columns of each token's rows into a [tokens x L*dk] block.
void pack(const std::vector<double>& src, std::size_t width, const std::vector<std::vector<std::size_t>>& tokens,
          std::size_t col0, std::size_t dk, std::vector<double>& dst) {
  const std::size_t span = tokens.empty() ? 0 : tokens.front().size() * dk;
  dst.resize(tokens.size() * span);
  for (std::size_t a = 0; a < tokens.size(); ++a)
    for (std::size_t j = 0; j < tokens[a].size(); ++j)
      std::copy_n(src.data() + tokens[a][j] * width + col0, dk, dst.data() + a * span + j * dk);
}

void unpack_add(const std::vector<double>& src, std::size_t width, const std::vector<std::vector<std::size_t>>& tokens,
                std::size_t col0, std::size_t dk, std::vector<double>& dst) {
  const std::size_t span = tokens.empty() ? 0 : tokens.front().size() * dk;
  for (std::size_t a = 0; a < tokens.size(); ++a)
    for (std::size_t j = 0; j < tokens[a].size(); ++j) {
      const double* s = src.data() + a * span + j * dk;
      double* d = dst.data() + tokens[a][j] * width + col0;
      for (std::size_t c = 0; c < dk; ++c) d[c] += s[c];
    }
}

void validate_plan(const std::vector<AttentionGroup>& plan, std::size_t query_rows, std::size_t key_rows) {
  std::vector<char> covered(query_rows, 0);
  for (const auto& group : plan) {
    if (group.keys.empty()) throw std::invalid_argument("attention: empty key set");
    if (group.queries.empty()) continue;
    const std::size_t span = group.queries.front().size();
    if (span == 0) throw std::invalid_argument("attention: token spans no rows");
    for (const auto& tok : group.queries) {
      if (tok.size() != span) throw std::invalid_argument("attention: ragged query tokens");
      for (auto r : tok) {
        if (r >= query_rows) throw std::out_of_range("attention: query row out of range");
        if (covered[r]++) throw std::invalid_argument("attention: query row in more than one token");
      }
    }
    for (const auto& tok : group.keys) {
      if (tok.size() != span) throw std::invalid_argument("attention: key token span differs from query span");
      for (auto r : tok)
        if (r >= key_rows) throw std::out_of_range("attention: key row out of range");
    }
  }
  if (std::find(covered.begin(), covered.end(), 0) != covered.end())
    throw std::invalid_argument("attention: plan leaves query rows uncovered");
}

}  // namespace

Tensor grouped_attention(const Tensor& queries, const Tensor& keys, const Tensor& values,
                         const std::vector<AttentionGroup>& plan, std::size_t head_count, AttentionTrace* trace) {
  if (queries.rank() != 2 || keys.rank() != 2 || values.shape() != keys.shape() || queries.dim(1) != keys.dim(1))
    throw std::invalid_argument("grouped_attention: expected projected [rows x d] operands of equal width");
  const std::size_t width = queries.dim(1);
  if (head_count == 0 || width % head_count != 0)
    throw std::invalid_argument("grouped_attention: width not divisible by head count");
  validate_plan(plan, queries.dim(0), keys.dim(0));
  const std::size_t dk = width / head_count;

  auto shared_plan = std::make_shared<const std::vector<AttentionGroup>>(plan);
  const std::vector<double> q(queries.data().begin(), queries.data().end());
  const std::vector<double> k(keys.data().begin(), keys.data().end());
  const std::vector<double> v(values.data().begin(), values.data().end());
  std::vector<double> out(queries.numel(), 0.0);
  // Softmax weights per (group, head), kept for backward.
  auto weights = std::make_shared<std::vector<std::vector<double>>>();

  std::vector<double> qg, kg, vg, og;
  for (const auto& group : plan) {
    if (group.queries.empty()) {
      for (std::size_t h = 0; h < head_count; ++h) weights->emplace_back();
      continue;
    }
    const std::size_t nq = group.queries.size(), nk = group.keys.size();
    const std::size_t span = group.queries.front().size() * dk;
    const double factor = 1.0 / std::sqrt(static_cast<double>(span));
    for (std::size_t h = 0; h < head_count; ++h) {
      pack(q, width, group.queries, h * dk, dk, qg);
      pack(k, width, group.keys, h * dk, dk, kg);
      pack(v, width, group.keys, h * dk, dk, vg);
      std::vector<double> a(nq * nk);
      matmul_nt(qg.data(), kg.data(), a.data(), nq, nk, span);
      for (std::size_t i = 0; i < nq; ++i) {
        double* row = a.data() + i * nk;
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < nk; ++j) {
          row[j] *= factor;
          peak = std::max(peak, row[j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < nk; ++j) total += (row[j] = std::exp(row[j] - peak));
        for (std::size_t j = 0; j < nk; ++j) row[j] /= total;
      }
      og.resize(nq * span);
      matmul_nn(a.data(), vg.data(), og.data(), nq, span, nk);
      unpack_add(og, width, group.queries, h * dk, dk, out);
      if (trace) trace->weights.push_back(Tensor::from({nq, nk}, a));
      weights->push_back(std::move(a));
    }
  }

  auto pq = queries.impl_ptr(), pk = keys.impl_ptr(), pv = values.impl_ptr();
  return make_op_result(
      "grouped_attention", queries.shape(), std::move(out), {queries, keys, values},
      [pq, pk, pv, shared_plan, weights, head_count, dk, width](std::span<const double> grad) {
        const std::vector<double> g(grad.begin(), grad.end());
        std::vector<double> dq(pq->data.size(), 0.0), dkv(pk->data.size(), 0.0), dv(pv->data.size(), 0.0);
        std::vector<double> qg, kg, vg, gg, da, tmp;
        std::size_t slot = 0;
        for (const auto& group : *shared_plan) {
          if (group.queries.empty()) {
            slot += head_count;
            continue;
          }
          const std::size_t nq = group.queries.size(), nk = group.keys.size();
          const std::size_t span = group.queries.front().size() * dk;
          const double factor = 1.0 / std::sqrt(static_cast<double>(span));
          for (std::size_t h = 0; h < head_count; ++h, ++slot) {
            const auto& a = (*weights)[slot];
            pack(pq->data, width, group.queries, h * dk, dk, qg);
            pack(pk->data, width, group.keys, h * dk, dk, kg);
            pack(pv->data, width, group.keys, h * dk, dk, vg);
            pack(g, width, group.queries, h * dk, dk, gg);
            // dV = A^T G
            tmp.resize(nk * span);
            matmul_tn(a.data(), gg.data(), tmp.data(), nq, span, nk);
            unpack_add(tmp, width, group.keys, h * dk, dk, dv);
            // dA = G V^T, then softmax backward into dS (scaled).
            da.resize(nq * nk);
            matmul_nt(gg.data(), vg.data(), da.data(), nq, nk, span);
            for (std::size_t i = 0; i < nq; ++i) {
              double dot = 0.0;
              for (std::size_t j = 0; j < nk; ++j) dot += da[i * nk + j] * a[i * nk + j];
              for (std::size_t j = 0; j < nk; ++j) da[i * nk + j] = a[i * nk + j] * (da[i * nk + j] - dot) * factor;
            }
            // dQ = dS K, dK = dS^T Q
            tmp.resize(nq * span);
            matmul_nn(da.data(), kg.data(), tmp.data(), nq, span, nk);
            unpack_add(tmp, width, group.queries, h * dk, dk, dq);
            tmp.resize(nk * span);
            matmul_tn(da.data(), qg.data(), tmp.data(), nq, span, nk);
            unpack_add(tmp, width, group.keys, h * dk, dk, dkv);
          }
        }
        auto accumulate = [](TensorImpl* p, const std::vector<double>& d) {
          if (!p->requires_grad) return;
          auto& buf = p->grad_buffer();
          for (std::size_t i = 0; i < d.size(); ++i) buf[i] += d[i];
        };
        accumulate(pq.get(), dq);
        accumulate(pk.get(), dkv);
        accumulate(pv.get(), dv);
      });
}

namespace {

Tensor rows_of(const Tensor& grid) {
  if (grid.rank() != 4) throw std::invalid_argument("attention: expected token grid [T x N x F x w], got " + shape_to_string(grid.shape()));
  return reshape(grid, {grid.dim(0) * grid.dim(1) * grid.dim(2), grid.dim(3)});
}

}  // namespace

Tensor attend_with_plan(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionLayer& layer,
                        const std::vector<AttentionGroup>& plan, AttentionTrace* trace) {
  const auto& cfg = layer.config;
  cfg.validate();
  const Tensor q_rows = rows_of(q);
  const Tensor k_rows = rows_of(k);
  const Tensor v_rows = k.impl() == v.impl() ? k_rows : rows_of(v);
  check_width(q_rows, cfg.query_width, "queries");
  check_width(k_rows, cfg.kv_width, "keys");
  check_width(v_rows, cfg.kv_width, "values");
  if (k.shape() != v.shape()) throw std::invalid_argument("attention: key and value grids differ in shape");
  const Tensor qp = matmul(q_rows, layer.w_query);
  const Tensor kp = matmul(k_rows, layer.w_key);
  const Tensor vp = matmul(v_rows, layer.w_value);
  Tensor out = matmul(grouped_attention(qp, kp, vp, plan, cfg.head_count, trace), layer.w_output);
  out = feed_forward(out, layer);
  return reshape(out, {q.dim(0), q.dim(1), q.dim(2), cfg.output_width});
}

std::vector<AttentionGroup> local_plan(std::size_t frames, std::size_t blocks, std::size_t freqs) {
  std::vector<AttentionGroup> plan(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < blocks; ++i)
      for (std::size_t f = 0; f < freqs; ++f) plan[t].queries.push_back({token_row(t, i, f, blocks, freqs)});
    plan[t].keys = plan[t].queries;
  }
  return plan;
}

std::vector<AttentionGroup> global_plan(std::size_t frames, std::size_t blocks, std::size_t freqs) {
  std::vector<AttentionGroup> plan(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t f = 0; f < freqs; ++f) {
      std::vector<std::size_t> plane;
      for (std::size_t i = 0; i < blocks; ++i) plane.push_back(token_row(t, i, f, blocks, freqs));
      plan[t].queries.push_back(std::move(plane));
    }
    plan[t].keys = plan[t].queries;
  }
  return plan;
}

Tensor gfa(const Tensor& grid, const AttentionLayer& layer, AttentionTrace* trace) {
  if (grid.rank() != 4 || grid.numel() == 0) throw std::invalid_argument("gfa: expected a non-empty token grid");
  return attend_with_plan(grid, grid, grid, layer, global_plan(grid.dim(0), grid.dim(1), grid.dim(2)), trace);
}

Tensor lfa(const Tensor& grid, const AttentionLayer& layer, AttentionTrace* trace) {
  if (grid.rank() != 4 || grid.numel() == 0) throw std::invalid_argument("lfa: expected a non-empty token grid");
  return attend_with_plan(grid, grid, grid, layer, local_plan(grid.dim(0), grid.dim(1), grid.dim(2)), trace);
}

namespace {

TokenGrid with_tokens(const TokenGrid& like, Tensor tokens) {
  TokenGrid out = like;
  out.tokens = std::move(tokens);
  return out;
}

}  // namespace

TokenGrid gfa(const TokenGrid& grid, const AttentionLayer& layer, AttentionTrace* trace) {
  return with_tokens(grid, gfa(grid.tokens, layer, trace));
}

TokenGrid lfa(const TokenGrid& grid, const AttentionLayer& layer, AttentionTrace* trace) {
  return with_tokens(grid, lfa(grid.tokens, layer, trace));
}

DualAttention DualAttention::random(const AttentionConfig& main_config, std::mt19937_64& rng) {
  main_config.validate();
  if (main_config.kv_width % 2 != 0)
    throw std::invalid_argument("DualAttention: key/value width " + std::to_string(main_config.kv_width) +
                                " cannot be split in half");
  const std::size_t half = main_config.kv_width / 2;
  const AttentionConfig branch{half, half, half, 1, half, false};
  DualAttention dual;
  dual.global_branch = AttentionLayer::random(branch, rng);
  dual.local_branch = AttentionLayer::random(branch, rng);
  dual.main = AttentionLayer::random(main_config, rng);
  return dual;
}

void DualAttention::collect(const std::string& prefix, NamedTensors& out) const {
  global_branch.collect(prefix + ".global", out);
  local_branch.collect(prefix + ".local", out);
  main.collect(prefix + ".main", out);
}

Tensor dual_branches(const Tensor& grid, const DualAttention& dual) {
  if (grid.rank() != 4) throw std::invalid_argument("dfa: expected token grid");
  const std::size_t w = grid.dim(3);
  if (w % 2 != 0) throw std::invalid_argument("dfa: odd feature width " + std::to_string(w) + " cannot be split in half");
  const Tensor global_half = slice(grid, 3, 0, w / 2);
  const Tensor local_half = slice(grid, 3, w / 2, w / 2);
  return concat({gfa(global_half, dual.global_branch), lfa(local_half, dual.local_branch)}, 3);
}

Tensor dfa_combine(const Tensor& q, const Tensor& k_global, const Tensor& k_local, const Tensor& v_global,
                   const Tensor& v_local, const AttentionLayer& main, AttentionTrace* trace) {
  const Tensor keys = concat({k_global, k_local}, 1);
  const Tensor values = concat({v_global, v_local}, 1);
  return feed_forward(multi_head(q, keys, values, main, trace), main);
}

namespace {

std::vector<AttentionGroup> all_to_all_plan(std::size_t query_rows, std::size_t key_rows) {
  AttentionGroup group;
  for (std::size_t r = 0; r < query_rows; ++r) group.queries.push_back({r});
  for (std::size_t r = 0; r < key_rows; ++r) group.keys.push_back({r});
  return {group};
}

}  // namespace

Tensor dfa(const Tensor& q, const Tensor& k, const Tensor& v, const DualAttention& dual, AttentionTrace* trace) {
  if (q.rank() != 4 || k.rank() != 4 || k.shape() != v.shape())
    throw std::invalid_argument("dfa: query/key/value grids are not geometry-compatible");
  const Tensor k_t = dual_branches(k, dual);
  const Tensor v_t = k.impl() == v.impl() ? k_t : dual_branches(v, dual);
  const std::size_t q_rows = q.dim(0) * q.dim(1) * q.dim(2);
  const std::size_t k_rows = k.dim(0) * k.dim(1) * k.dim(2);
  return attend_with_plan(q, k_t, v_t, dual.main, all_to_all_plan(q_rows, k_rows), trace);
}

TokenGrid dfa(const TokenGrid& q, const TokenGrid& k, const TokenGrid& v, const DualAttention& dual,
              AttentionTrace* trace) {
  return with_tokens(q, dfa(q.tokens, k.tokens, v.tokens, dual, trace));
}

}  // namespace ftvsr
