// Copyright 2026 The entsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "entsum/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "entsum/init.hpp"

namespace entsum {

AbsolutePositionalEncoding::AbsolutePositionalEncoding(Eigen::Index max_len,
                                                       Eigen::Index d_model)
    : table_(kernels::sinusoid_table(max_len, d_model)) {}

Matrix AbsolutePositionalEncoding::block(Eigen::Index first,
                                         Eigen::Index count) const {
  if (first < 0 || first + count > max_len())
    throw CapacityError("absolute positions " + std::to_string(first) + ".." +
                        std::to_string(first + count - 1) +
                        " exceed L_max = " + std::to_string(max_len()));
  return table_.middleRows(first, count);
}

Matrix AbsolutePositionalEncoding::rows(std::span<const int> positions) const {
  Matrix out(static_cast<Eigen::Index>(positions.size()), dim());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] < 0 || positions[i] >= max_len())
      throw CapacityError("absolute position " + std::to_string(positions[i]) +
                          " exceeds L_max = " + std::to_string(max_len()));
    out.row(static_cast<Eigen::Index>(i)) = table_.row(positions[i]);
  }
  return out;
}

RelativePositionalEncoding::RelativePositionalEncoding(Eigen::Index max_len,
                                                       Eigen::Index d_model)
    : max_len_(max_len),
      table_(kernels::sinusoid_table(2 * max_len - 1, d_model, -(max_len - 1))) {}

Eigen::Index RelativePositionalEncoding::storage_row(Eigen::Index offset) const {
  if (offset < -max_offset() || offset > max_offset())
    throw CapacityError("relative offset " + std::to_string(offset) +
                        " outside +-" + std::to_string(max_offset()));
  return offset + max_len_ - 1;
}

Matrix RelativePositionalEncoding::offsets(Eigen::Index lo, Eigen::Index hi) const {
  const Eigen::Index first = storage_row(lo);
  storage_row(hi);
  return table_.middleRows(first, hi - lo + 1);
}

Positions Positions::with_memory(Eigen::Index n, Eigen::Index m) {
  Positions p;
  p.query.resize(static_cast<std::size_t>(n));
  p.key.resize(static_cast<std::size_t>(m + n));
  for (Eigen::Index i = 0; i < n; ++i) p.query[i] = static_cast<int>(m + i);
  for (Eigen::Index j = 0; j < m + n; ++j) p.key[j] = static_cast<int>(j);
  return p;
}

Positions Positions::ranges(int query_first, Eigen::Index n, int key_first,
                            Eigen::Index k) {
  Positions p;
  for (Eigen::Index i = 0; i < n; ++i) p.query.push_back(query_first + static_cast<int>(i));
  for (Eigen::Index j = 0; j < k; ++j) p.key.push_back(key_first + static_cast<int>(j));
  return p;
}

Tensor vanilla_scores(const Tensor& queries, const Tensor& keys,
                      const VanillaHeadParams& head) {
  Tensor q = matmul(queries, head.w_q);
  Tensor k = matmul(keys, head.w_k);
  return matmul(q, transpose(k));
}

Tensor vanilla_scores(const Tensor& embeddings,
                      const AbsolutePositionalEncoding& pe,
                      const VanillaHeadParams& head) {
  Tensor x = add(embeddings, Tensor::constant(pe.block(0, embeddings.rows())));
  return vanilla_scores(x, x, head);
}

Tensor xl_scores(const Tensor& h_q, const Tensor& h_kv, const Positions& pos,
                 const RelativePositionalEncoding& rel,
                 const AttentionHeadParams& head) {
  const auto n = static_cast<Eigen::Index>(pos.query.size());
  const auto k = static_cast<Eigen::Index>(pos.key.size());
  if (n != h_q.rows() || k != h_kv.rows())
    throw ShapeError("xl_scores: positions (" + std::to_string(n) + ", " +
                     std::to_string(k) + ") do not match " + shape_string(h_q) +
                     " / " + shape_string(h_kv));
  Tensor q = matmul(h_q, head.w_q);
  Tensor key = matmul(h_kv, head.w_ke);
  Tensor content = matmul(add(q, head.u), transpose(key));
  if (n == 0 || k == 0) return content;

  int lo = pos.query[0] - pos.key[0], hi = lo;
  for (int qi : pos.query)
    for (int kj : pos.key) {
      lo = std::min(lo, qi - kj);
      hi = std::max(hi, qi - kj);
    }
  Tensor r = Tensor::constant(rel.offsets(lo, hi));
  Tensor r_proj = matmul(r, head.w_kr);
  Tensor pos_all = matmul(add(q, head.v), transpose(r_proj));
  IndexMatrix index(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) index(i, j) = pos.query[i] - pos.key[j] - lo;
  return add(content, gather_cols(pos_all, index));
}

Tensor xl_scores(const Tensor& h_q, const Tensor& h_kv,
                 const RelativePositionalEncoding& rel,
                 const AttentionHeadParams& head) {
  if (h_kv.rows() < h_q.rows())
    throw ShapeError("xl_scores: keys " + shape_string(h_kv) +
                     " shorter than queries " + shape_string(h_q));
  return xl_scores(h_q, h_kv,
                   Positions::with_memory(h_q.rows(), h_kv.rows() - h_q.rows()),
                   rel, head);
}

std::vector<Tensor> MultiHeadAttention::parameters() const {
  std::vector<Tensor> out;
  for (const auto& h : vanilla_heads) out.insert(out.end(), {h.w_q, h.w_k, h.w_v});
  for (const auto& h : xl_heads)
    out.insert(out.end(), {h.w_q, h.w_ke, h.w_kr, h.w_v, h.u, h.v});
  out.push_back(w_o);
  return out;
}

MultiHeadAttention make_attention(Backbone backbone, int n_heads, int d_model,
                                  Rng& rng) {
  if (n_heads <= 0 || d_model % n_heads != 0)
    throw ConfigError("n_heads = " + std::to_string(n_heads) +
                      " must divide d_model = " + std::to_string(d_model));
  const int d_head = d_model / n_heads;
  MultiHeadAttention attn;
  attn.backbone = backbone;
  for (int h = 0; h < n_heads; ++h) {
    if (backbone == Backbone::kXl) {
      AttentionHeadParams p;
      p.w_q = Tensor::parameter(init::xavier_uniform(d_model, d_head, rng));
      p.w_ke = Tensor::parameter(init::xavier_uniform(d_model, d_head, rng));
      p.w_kr = Tensor::parameter(init::xavier_uniform(d_model, d_head, rng));
      p.w_v = Tensor::parameter(init::xavier_uniform(d_model, d_head, rng));
      p.u = Tensor::parameter(init::normal(1, d_head, 0.02, rng));
      p.v = Tensor::parameter(init::normal(1, d_head, 0.02, rng));
      attn.xl_heads.push_back(std::move(p));
    } else {
      VanillaHeadParams p;
      p.w_q = Tensor::parameter(init::xavier_uniform(d_model, d_head, rng));
      p.w_k = Tensor::parameter(init::xavier_uniform(d_model, d_head, rng));
      p.w_v = Tensor::parameter(init::xavier_uniform(d_model, d_head, rng));
      attn.vanilla_heads.push_back(std::move(p));
    }
  }
  attn.w_o = Tensor::parameter(init::xavier_uniform(d_model, d_model, rng));
  return attn;
}

Tensor multi_head_attention(const Tensor& queries, const Tensor& keys_values,
                            const MultiHeadAttention& attn, const Mask& visible,
                            const Positions* positions,
                            const RelativePositionalEncoding* rel) {
  const std::size_t heads = attn.head_count();
  if (heads == 0) throw ConfigError("multi_head_attention: no heads");
  if (attn.backbone == Backbone::kXl && (positions == nullptr || rel == nullptr))
    throw ConfigError("multi_head_attention: xl scores need positions and R");

  std::vector<Tensor> outputs;
  outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor scores, w_v;
    if (attn.backbone == Backbone::kXl) {
      const auto& p = attn.xl_heads[h];
      scores = xl_scores(queries, keys_values, *positions, *rel, p);
      w_v = p.w_v;
    } else {
      const auto& p = attn.vanilla_heads[h];
      scores = vanilla_scores(queries, keys_values, p);
      w_v = p.w_v;
    }
    const double d_head = static_cast<double>(w_v.cols());
    Tensor weights = softmax_rows(scale(scores, 1.0 / std::sqrt(d_head)), visible);
    outputs.push_back(matmul(weights, matmul(keys_values, w_v)));
  }
  return matmul(concat_cols(outputs), attn.w_o);
}

Tensor concat_memory(const Matrix& mem, const Tensor& current) {
  if (mem.rows() == 0) return current;
  if (mem.cols() != current.cols())
    throw ShapeError("concat_memory: memory " + shape_string(mem.rows(), mem.cols()) +
                     " vs current " + shape_string(current));
  std::vector<Tensor> parts{Tensor::constant(mem), current};
  return concat_rows(parts);
}

Matrix update_memory(const Matrix& old, const Matrix& new_hidden,
                     Eigen::Index capacity) {
  if (capacity <= 0) return Matrix(0, new_hidden.cols());
  if (old.rows() > 0 && old.cols() != new_hidden.cols())
    throw ShapeError("update_memory: memory " + shape_string(old.rows(), old.cols()) +
                     " vs new " + shape_string(new_hidden.rows(), new_hidden.cols()));
  const Eigen::Index total = old.rows() + new_hidden.rows();
  const Eigen::Index keep = std::min(capacity, total);
  Matrix out(keep, new_hidden.cols());
  // Row r of the output is row (total - keep + r) of [old; new_hidden].
  for (Eigen::Index r = 0; r < keep; ++r) {
    const Eigen::Index src = total - keep + r;
    out.row(r) = src < old.rows() ? old.row(src) : new_hidden.row(src - old.rows());
  }
  return out;
}

SegmentMemory update_memory(const SegmentMemory& old,
                            const std::vector<Matrix>& new_hidden,
                            Eigen::Index capacity) {
  SegmentMemory out;
  out.capacity = capacity;
  out.layers.reserve(new_hidden.size());
  for (std::size_t l = 0; l < new_hidden.size(); ++l) {
    const Matrix empty(0, new_hidden[l].cols());
    const Matrix& prev = l < old.layers.size() ? old.layers[l] : empty;
    out.layers.push_back(update_memory(prev, new_hidden[l], capacity));
  }
  return out;
}

}  // namespace entsum
