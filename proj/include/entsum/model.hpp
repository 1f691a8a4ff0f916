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

// Entity-aware encoder-decoder summarizer.
//
// Encoder layer, each sublayer wrapped as x <- LayerNorm(x + sublayer(x)):
//   1. token self-attention over [memory; segment]
//   2. entity self-attention over the segment's entity states
//   3. token self-attention over [memory; segment]
//   4. token -> entity cross attention
//   5. position-wise feed-forward
// Decoder layer:
//   1. causal token self-attention
//   2. token -> entity attention over entities linked in the generated prefix
//   3. cross attention over every encoder state
//   4. causal token self-attention
//   5. position-wise feed-forward
// Entity sublayers are identity (no normalisation) when there is nothing to
// attend to, and are not built at all with entity_mode = off.

#include <span>
#include <string>
#include <vector>

#include "entsum/attention.hpp"
#include "entsum/config.hpp"
#include "entsum/linker.hpp"
#include "entsum/tensor.hpp"
#include "entsum/vocab.hpp"

namespace entsum {

struct Linear {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
};

struct LayerNormParams {
  Tensor gain;
  Tensor bias;
};

struct FeedForward {
  Linear inner;
  Linear outer;
};

struct EncoderLayer {
  MultiHeadAttention token_attn;
  LayerNormParams token_norm;
  MultiHeadAttention entity_attn;
  LayerNormParams entity_norm;
  MultiHeadAttention self_attn;
  LayerNormParams self_norm;
  MultiHeadAttention entity_cross_attn;
  LayerNormParams entity_cross_norm;
  FeedForward ffn;
  LayerNormParams ffn_norm;
};

struct DecoderLayer {
  MultiHeadAttention self_attn;
  LayerNormParams self_norm;
  MultiHeadAttention entity_attn;
  LayerNormParams entity_norm;
  MultiHeadAttention cross_attn;
  LayerNormParams cross_norm;
  MultiHeadAttention second_self_attn;
  LayerNormParams second_self_norm;
  FeedForward ffn;
  LayerNormParams ffn_norm;
};

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

// Entity appearing in an article, placed at the global index of its first
// token.
struct EntityMention {
  int entity_id = 0;
  int position = 0;
};

// Entity linked in the decoder prefix. start/end are decoder input
// positions (generated token k sits at input position k + 1).
struct DecoderEntity {
  int entity_id = 0;
  int start = 0;
  int end = 0;

  friend bool operator==(const DecoderEntity&, const DecoderEntity&) = default;
};

// Union of the entities visible anywhere in a decoder run; visible(i, e)
// says whether input position i may attend entity e. Position i sees the
// spans that link_prefix finds in the i tokens generated before it.
struct DecoderEntityPlan {
  std::vector<DecoderEntity> entities;
  Mask visible;
};

DecoderEntityPlan plan_decoder_entities(std::span<const std::string> generated,
                                        int positions, const Gazetteer* gazetteer,
                                        int min_tokens);

// Entities visible from the next position after `generated`.
std::vector<DecoderEntity> decoder_entities_for_prefix(
    std::span<const std::string> generated, const Gazetteer* gazetteer, int min_tokens);

class Summarizer {
 public:
  // entity_table is frozen; pass an empty matrix with entity_mode = off.
  Summarizer(ModelConfig config, Vocabulary vocab, Matrix entity_table,
             std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  bool uses_entities() const { return config_.entity_mode != EntityMode::kOff; }

  // Trainable parameters in a fixed order.
  const std::vector<NamedParameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;
  const Tensor* find_parameter(const std::string& name) const;

  const Tensor& entity_table() const { return entity_table_; }
  const Tensor& token_embedding() const { return token_embedding_; }
  const std::vector<Linear>& conversion() const { return conversion_; }
  const std::vector<EncoderLayer>& encoder() const { return encoder_; }
  const std::vector<DecoderLayer>& decoder() const { return decoder_; }
  const AbsolutePositionalEncoding& absolute_pe() const { return absolute_pe_; }
  const RelativePositionalEncoding& relative_pe() const { return relative_pe_; }

 private:
  Tensor add_parameter(const std::string& name, Matrix value);
  MultiHeadAttention add_attention(const std::string& name, Rng& rng);
  LayerNormParams add_norm(const std::string& name);
  Linear add_linear(const std::string& name, int in, int out, Rng& rng);

  ModelConfig config_;
  Vocabulary vocab_;
  AbsolutePositionalEncoding absolute_pe_;
  RelativePositionalEncoding relative_pe_;
  Tensor entity_table_;
  Tensor token_embedding_;
  std::vector<Linear> conversion_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  std::vector<NamedParameter> params_;
};

// Unit-norm rows drawn uniformly, the stand-in table for entity_mode=random.
Matrix random_entity_table(int entity_count, int dim, std::uint64_t seed);

// Dropout switch for one forward pass; no rng means evaluation mode.
struct ForwardContext {
  Rng* dropout_rng = nullptr;
};

Tensor linear(const Tensor& x, const Linear& layer);
Tensor feed_forward(const Tensor& x, const FeedForward& ffn);

// Entity Conversion Learner: affine + ReLU layers, the last one affine only.
Tensor entity_conversion(const Summarizer& model, const Tensor& entity_embs);

// Token embeddings scaled by sqrt(d_model); the vanilla backbone also adds
// the absolute encoding of positions first_position, first_position+1, ...
Tensor embed_tokens(const Summarizer& model, std::span<const int> ids, int first_position);

// Converted (and, for vanilla, position-encoded) entity states.
Tensor embed_entities(const Summarizer& model, std::span<const int> entity_ids,
                      std::span<const int> positions);

struct SegmentOutput {
  Tensor states;
  SegmentMemory memory;
};

// One encoder segment whose first token sits at global position
// segment_start. `entities` are the mentions starting inside the segment.
// The returned memory holds each layer's input rows, truncated to
// memory_len.
SegmentOutput encode_segment(const Summarizer& model, const Tensor& token_inputs,
                             int segment_start, std::span<const EntityMention> entities,
                             const SegmentMemory& memory, ForwardContext& ctx);

// Whole article: one segment for vanilla, segment_len chunks with memory
// for xl. Returns the final-layer states of all segments stacked.
Tensor encode_article(const Summarizer& model, std::span<const int> ids,
                      std::span<const EntityMention> entities, ForwardContext& ctx);

// Teacher-forced decoder over BOS-prefixed input ids; t x vocab logits.
Tensor decode_forward(const Summarizer& model, const Tensor& encoder_states,
                      std::span<const int> input_ids, const DecoderEntityPlan& plan,
                      ForwardContext& ctx);

// Per-layer key caches for incremental decoding.
struct DecoderCache {
  std::vector<Matrix> self_keys;
  std::vector<Matrix> second_keys;
  int length = 0;
};

DecoderCache make_decoder_cache(const Summarizer& model);

// Feeds one input token at position cache.length and returns its next-token
// logits (1 x vocab). Gradient recording is off.
Vector decode_step(const Summarizer& model, const Tensor& encoder_states, int input_id,
                   std::span<const DecoderEntity> visible_entities, DecoderCache& cache);

// Model-ready form of one article/summary pair.
struct Example {
  std::vector<int> article_ids;
  std::vector<EntityMention> article_entities;
  std::vector<int> decoder_inputs;  // <bos> y_0 .. y_{T-1}
  std::vector<int> targets;         // y_0 .. y_{T-1} <eos>
  DecoderEntityPlan plan;
  std::vector<std::string> summary_tokens;
};

Example make_example(const Summarizer& model, const LinkedDocument& article,
                     std::span<const std::string> summary_tokens,
                     const Gazetteer* gazetteer, int max_src, int max_tgt,
                     int entity_min_tokens);

// Mean teacher-forced cross-entropy over the summary tokens and <eos>.
Tensor model_loss(const Summarizer& model, const Example& example, ForwardContext& ctx);
// Full-logit variant for callers that need per-position predictions.
Tensor example_logits(const Summarizer& model, const Example& example, ForwardContext& ctx);

}  // namespace entsum
