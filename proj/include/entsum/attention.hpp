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

#pragma once

// Multi-head attention with two score decompositions:
//
//   vanilla: A(i,j) = (W_q (E_i + U_i)) . (W_k (E_j + U_j))
//   xl:      A(i,j) = q_i.k_j + q_i.(W_kR R_{i-j}) + u.k_j + v.(W_kR R_{i-j})
//            with q_i = W_q h_i, k_j = W_kE h_j
//
// plus the segment-level memory used by the xl form. Projection matrices are
// stored in the x * W convention (d_model x d_head), so a head's query block
// for a row-stacked input h is h * w_q.

#include <span>
#include <vector>

#include "entsum/tensor.hpp"

namespace entsum {

enum class Backbone { kVanilla, kXl };

// Fixed sinusoids indexed by absolute position 0 .. max_len-1.
class AbsolutePositionalEncoding {
 public:
  AbsolutePositionalEncoding(Eigen::Index max_len, Eigen::Index d_model);

  Eigen::Index max_len() const { return table_.rows(); }
  Eigen::Index dim() const { return table_.cols(); }
  const Matrix& table() const { return table_; }
  // Rows first .. first+count-1; CapacityError past max_len.
  Matrix block(Eigen::Index first, Eigen::Index count) const;
  Matrix rows(std::span<const int> positions) const;

 private:
  Matrix table_;
};

// Fixed sinusoids indexed by signed offset in [-(max_len-1), max_len-1],
// stored at row offset + max_len - 1.
class RelativePositionalEncoding {
 public:
  RelativePositionalEncoding(Eigen::Index max_len, Eigen::Index d_model);

  Eigen::Index max_len() const { return max_len_; }
  Eigen::Index max_offset() const { return max_len_ - 1; }
  Eigen::Index dim() const { return table_.cols(); }
  const Matrix& table() const { return table_; }
  Eigen::Index storage_row(Eigen::Index offset) const;
  // Rows for offsets lo .. hi inclusive.
  Matrix offsets(Eigen::Index lo, Eigen::Index hi) const;

 private:
  Eigen::Index max_len_;
  Matrix table_;
};

struct VanillaHeadParams {
  Tensor w_q, w_k, w_v;
};

struct AttentionHeadParams {
  Tensor w_q, w_ke, w_kr, w_v;
  Tensor u, v;  // 1 x d_head
};

// Positions whose differences give the relative offset of each
// (query, key) pair: offset(i, j) = query[i] - key[j].
struct Positions {
  std::vector<int> query;
  std::vector<int> key;

  // Queries are the last n of m + n keys: query i sits at m + i.
  static Positions with_memory(Eigen::Index n, Eigen::Index m);
  static Positions ranges(int query_first, Eigen::Index n, int key_first,
                          Eigen::Index k);
};

Tensor vanilla_scores(const Tensor& queries, const Tensor& keys,
                      const VanillaHeadParams& head);
// Single-sequence form: adds U to the embeddings before projecting.
Tensor vanilla_scores(const Tensor& embeddings,
                      const AbsolutePositionalEncoding& pe,
                      const VanillaHeadParams& head);

Tensor xl_scores(const Tensor& h_q, const Tensor& h_kv, const Positions& pos,
                 const RelativePositionalEncoding& rel,
                 const AttentionHeadParams& head);
// Memory layout: h_kv = [memory; current], h_q = current.
Tensor xl_scores(const Tensor& h_q, const Tensor& h_kv,
                 const RelativePositionalEncoding& rel,
                 const AttentionHeadParams& head);

struct MultiHeadAttention {
  Backbone backbone = Backbone::kXl;
  std::vector<VanillaHeadParams> vanilla_heads;
  std::vector<AttentionHeadParams> xl_heads;
  Tensor w_o;  // d_model x d_model

  std::size_t head_count() const {
    return backbone == Backbone::kXl ? xl_heads.size() : vanilla_heads.size();
  }
  std::vector<Tensor> parameters() const;
};

// Builds a randomly initialised attention block; n_heads must divide d_model.
MultiHeadAttention make_attention(Backbone backbone, int n_heads, int d_model,
                                  Rng& rng);

// Per head: scores / sqrt(d_head), masked softmax, weighted sum of the
// W_v-projected keys_values. Heads are concatenated and projected by W_O.
// positions and rel are required for the xl backbone and ignored otherwise.
Tensor multi_head_attention(const Tensor& queries, const Tensor& keys_values,
                            const MultiHeadAttention& attn, const Mask& visible,
                            const Positions* positions,
                            const RelativePositionalEncoding* rel);

// Cached, gradient-free hidden states of the previous segment, one matrix
// per layer.
struct SegmentMemory {
  std::vector<Matrix> layers;
  Eigen::Index capacity = 0;

  Eigen::Index length() const {
    return layers.empty() ? 0 : layers.front().rows();
  }
};

// [mem; current]. mem enters as a constant, so gradient reaches only the
// current rows.
Tensor concat_memory(const Matrix& mem, const Tensor& current);

// Last `capacity` rows of [old; new_hidden].
Matrix update_memory(const Matrix& old, const Matrix& new_hidden,
                     Eigen::Index capacity);
SegmentMemory update_memory(const SegmentMemory& old,
                            const std::vector<Matrix>& new_hidden,
                            Eigen::Index capacity);

}  // namespace entsum
