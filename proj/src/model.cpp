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

#include "entsum/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "entsum/init.hpp"

namespace entsum {
namespace {

Tensor norm(const Tensor& x, const LayerNormParams& p, double eps) {
  return layer_norm(x, p.gain, p.bias, eps);
}

Tensor maybe_dropout(const Tensor& x, const Summarizer& model, ForwardContext& ctx) {
  if (ctx.dropout_rng == nullptr || model.config().dropout <= 0.0) return x;
  return dropout(x, model.config().dropout, *ctx.dropout_rng);
}

// x <- LayerNorm(x + dropout(update))
Tensor residual(const Tensor& x, const Tensor& update, const LayerNormParams& p,
                const Summarizer& model, ForwardContext& ctx) {
  return norm(add(x, maybe_dropout(update, model, ctx)), p, model.config().ln_eps);
}

Mask causal_mask(Eigen::Index n) {
  Mask m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = j <= i;
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Decoder entity planning

std::vector<DecoderEntity> decoder_entities_for_prefix(
    std::span<const std::string> generated, const Gazetteer* gazetteer, int min_tokens) {
  std::vector<DecoderEntity> out;
  if (gazetteer == nullptr) return out;
  for (const EntitySpan& s : link_prefix(generated, *gazetteer, min_tokens))
    out.push_back({s.entity_id, s.start + 1, s.end + 1});
  return out;
}

DecoderEntityPlan plan_decoder_entities(std::span<const std::string> generated,
                                        int positions, const Gazetteer* gazetteer,
                                        int min_tokens) {
  DecoderEntityPlan plan;
  std::vector<std::vector<DecoderEntity>> per_position(static_cast<std::size_t>(positions));
  std::map<std::tuple<int, int, int>, int> index;
  for (int i = 0; i < positions; ++i) {
    const auto prefix = generated.first(std::min<std::size_t>(generated.size(), static_cast<std::size_t>(i)));
    per_position[static_cast<std::size_t>(i)] =
        decoder_entities_for_prefix(prefix, gazetteer, min_tokens);
    for (const DecoderEntity& e : per_position[static_cast<std::size_t>(i)])
      index.emplace(std::make_tuple(e.start, e.end, e.entity_id), 0);
  }
  int k = 0;
  for (auto& [key, slot] : index) {
    slot = k++;
    plan.entities.push_back({std::get<2>(key), std::get<0>(key), std::get<1>(key)});
  }
  plan.visible = Mask::Constant(positions, k, false);
  for (int i = 0; i < positions; ++i)
    for (const DecoderEntity& e : per_position[static_cast<std::size_t>(i)])
      plan.visible(i, index.at(std::make_tuple(e.start, e.end, e.entity_id))) = true;
  return plan;
}

// ---------------------------------------------------------------------------
// Summarizer

Summarizer::Summarizer(ModelConfig config, Vocabulary vocab, Matrix entity_table,
                       std::uint64_t seed)
    : config_(std::move(config)),
      vocab_(std::move(vocab)),
      absolute_pe_(config_.L_max, config_.d_model),
      relative_pe_(config_.L_max, config_.d_model) {
  config_.vocab_size = vocab_.size();
  if (config_.entity_mode == EntityMode::kOff) {
    entity_table = Matrix(0, config_.d_ent);
    config_.entity_count = 0;
  } else {
    if (entity_table.cols() != config_.d_ent)
      throw ConfigError("entity table has " + std::to_string(entity_table.cols()) +
                        " columns, d_ent = " + std::to_string(config_.d_ent));
    if (config_.entity_count != 0 && config_.entity_count != entity_table.rows())
      throw ConfigError("entity table has " + std::to_string(entity_table.rows()) +
                        " rows, entity_count = " + std::to_string(config_.entity_count));
    config_.entity_count = static_cast<int>(entity_table.rows());
  }
  config_.validate();
  entity_table_ = Tensor::constant(std::move(entity_table));

  Rng rng(seed);
  const int d = config_.d_model;
  token_embedding_ = add_parameter(
      "token_embedding", init::normal(vocab_.size(), d, 1.0 / std::sqrt(double(d)), rng));

  if (uses_entities()) {
    for (int l = 0; l < config_.conversion_layers; ++l)
      conversion_.push_back(add_linear("conversion." + std::to_string(l),
                                       l == 0 ? config_.d_ent : d, d, rng));
  }

  for (int l = 0; l < config_.n_layers; ++l) {
    const std::string p = "encoder." + std::to_string(l) + ".";
    EncoderLayer layer;
    layer.token_attn = add_attention(p + "token_attn", rng);
    layer.token_norm = add_norm(p + "token_norm");
    if (uses_entities()) {
      layer.entity_attn = add_attention(p + "entity_attn", rng);
      layer.entity_norm = add_norm(p + "entity_norm");
    }
    layer.self_attn = add_attention(p + "self_attn", rng);
    layer.self_norm = add_norm(p + "self_norm");
    if (uses_entities()) {
      layer.entity_cross_attn = add_attention(p + "entity_cross_attn", rng);
      layer.entity_cross_norm = add_norm(p + "entity_cross_norm");
    }
    layer.ffn.inner = add_linear(p + "ffn.inner", d, config_.d_ff, rng);
    layer.ffn.outer = add_linear(p + "ffn.outer", config_.d_ff, d, rng);
    layer.ffn_norm = add_norm(p + "ffn_norm");
    encoder_.push_back(std::move(layer));
  }

  for (int l = 0; l < config_.n_layers; ++l) {
    const std::string p = "decoder." + std::to_string(l) + ".";
    DecoderLayer layer;
    layer.self_attn = add_attention(p + "self_attn", rng);
    layer.self_norm = add_norm(p + "self_norm");
    if (uses_entities()) {
      layer.entity_attn = add_attention(p + "entity_attn", rng);
      layer.entity_norm = add_norm(p + "entity_norm");
    }
    layer.cross_attn = add_attention(p + "cross_attn", rng);
    layer.cross_norm = add_norm(p + "cross_norm");
    layer.second_self_attn = add_attention(p + "second_self_attn", rng);
    layer.second_self_norm = add_norm(p + "second_self_norm");
    layer.ffn.inner = add_linear(p + "ffn.inner", d, config_.d_ff, rng);
    layer.ffn.outer = add_linear(p + "ffn.outer", config_.d_ff, d, rng);
    layer.ffn_norm = add_norm(p + "ffn_norm");
    decoder_.push_back(std::move(layer));
  }
}

Tensor Summarizer::add_parameter(const std::string& name, Matrix value) {
  Tensor t = Tensor::parameter(std::move(value));
  params_.push_back({name, t});
  return t;
}

MultiHeadAttention Summarizer::add_attention(const std::string& name, Rng& rng) {
  MultiHeadAttention attn =
      make_attention(config_.backbone, config_.n_heads, config_.d_model, rng);
  for (std::size_t h = 0; h < attn.head_count(); ++h) {
    const std::string p = name + ".head" + std::to_string(h) + ".";
    if (config_.backbone == Backbone::kXl) {
      const auto& hp = attn.xl_heads[h];
      params_.push_back({p + "w_q", hp.w_q});
      params_.push_back({p + "w_ke", hp.w_ke});
      params_.push_back({p + "w_kr", hp.w_kr});
      params_.push_back({p + "w_v", hp.w_v});
      params_.push_back({p + "u", hp.u});
      params_.push_back({p + "v", hp.v});
    } else {
      const auto& hp = attn.vanilla_heads[h];
      params_.push_back({p + "w_q", hp.w_q});
      params_.push_back({p + "w_k", hp.w_k});
      params_.push_back({p + "w_v", hp.w_v});
    }
  }
  params_.push_back({name + ".w_o", attn.w_o});
  return attn;
}

LayerNormParams Summarizer::add_norm(const std::string& name) {
  LayerNormParams p;
  p.gain = add_parameter(name + ".gain", Matrix::Ones(1, config_.d_model));
  p.bias = add_parameter(name + ".bias", Matrix::Zero(1, config_.d_model));
  return p;
}

Linear Summarizer::add_linear(const std::string& name, int in, int out, Rng& rng) {
  Linear l;
  l.weight = add_parameter(name + ".weight", init::xavier_uniform(in, out, rng));
  l.bias = add_parameter(name + ".bias", Matrix::Zero(1, out));
  return l;
}

std::size_t Summarizer::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.tensor.value().size());
  return n;
}

const Tensor* Summarizer::find_parameter(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p.tensor;
  return nullptr;
}

Matrix random_entity_table(int entity_count, int dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m = init::uniform(entity_count, dim, 6.0 / std::sqrt(double(dim)), rng);
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i).normalize();
  return m;
}

// ---------------------------------------------------------------------------
// Building blocks

Tensor linear(const Tensor& x, const Linear& layer) {
  return add(matmul(x, layer.weight), layer.bias);
}

Tensor feed_forward(const Tensor& x, const FeedForward& ffn) {
  return linear(relu(linear(x, ffn.inner)), ffn.outer);
}

Tensor entity_conversion(const Summarizer& model, const Tensor& entity_embs) {
  const auto& layers = model.conversion();
  if (layers.empty()) throw ConfigError("entity_conversion: model has no entity channel");
  if (entity_embs.cols() != layers.front().weight.rows())
    throw ShapeError("entity_conversion: input " + shape_string(entity_embs) +
                     " but d_ent = " + std::to_string(layers.front().weight.rows()));
  if (entity_embs.rows() == 0)
    return Tensor::constant(Matrix(0, layers.back().weight.cols()));
  Tensor x = entity_embs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    x = linear(x, layers[l]);
    if (l + 1 < layers.size()) x = relu(x);
  }
  return x;
}

Tensor embed_tokens(const Summarizer& model, std::span<const int> ids, int first_position) {
  const double s = std::sqrt(static_cast<double>(model.config().d_model));
  Tensor x = scale(gather_rows(model.token_embedding(), ids), s);
  if (model.config().backbone == Backbone::kVanilla)
    x = add(x, Tensor::constant(model.absolute_pe().block(
                   first_position, static_cast<Eigen::Index>(ids.size()))));
  return x;
}

Tensor embed_entities(const Summarizer& model, std::span<const int> entity_ids,
                      std::span<const int> positions) {
  for (int id : entity_ids)
    if (id < 0 || id >= model.config().entity_count)
      throw ConfigError("entity id " + std::to_string(id) + " outside the entity table (" +
                        std::to_string(model.config().entity_count) + " rows)");
  Tensor x = entity_conversion(model, gather_rows(model.entity_table(), entity_ids));
  if (model.config().backbone == Backbone::kVanilla && x.rows() > 0)
    x = add(x, Tensor::constant(model.absolute_pe().rows(positions)));
  return x;
}

// ---------------------------------------------------------------------------
// Encoder

SegmentOutput encode_segment(const Summarizer& model, const Tensor& token_inputs,
                             int segment_start, std::span<const EntityMention> entities,
                             const SegmentMemory& memory, ForwardContext& ctx) {
  const ModelConfig& cfg = model.config();
  const Eigen::Index n = token_inputs.rows();
  if (n == 0) throw ConfigError("encode_segment: empty token segment");
  const bool xl = cfg.backbone == Backbone::kXl;
  const RelativePositionalEncoding* rel = xl ? &model.relative_pe() : nullptr;
  const bool with_entities = model.uses_entities() && !entities.empty();

  std::vector<int> ent_ids, ent_pos;
  for (const EntityMention& e : entities) {
    ent_ids.push_back(e.entity_id);
    ent_pos.push_back(e.position);
  }
  Tensor ents;
  if (with_entities) ents = maybe_dropout(embed_entities(model, ent_ids, ent_pos), model, ctx);
  Positions ent_self{ent_pos, ent_pos};
  Positions tok_ent;
  if (with_entities) {
    for (Eigen::Index i = 0; i < n; ++i) tok_ent.query.push_back(segment_start + static_cast<int>(i));
    tok_ent.key = ent_pos;
  }

  Tensor x = token_inputs;
  std::vector<Matrix> layer_inputs;
  for (std::size_t l = 0; l < model.encoder().size(); ++l) {
    const EncoderLayer& layer = model.encoder()[l];
    const Matrix empty(0, cfg.d_model);
    const Matrix& mem = l < memory.layers.size() ? memory.layers[l] : empty;
    const Positions tok = Positions::with_memory(n, mem.rows());
    layer_inputs.push_back(x.value());

    x = residual(x, multi_head_attention(x, concat_memory(mem, x), layer.token_attn, Mask(), &tok, rel),
                 layer.token_norm, model, ctx);
    if (with_entities)
      ents = residual(ents, multi_head_attention(ents, ents, layer.entity_attn, Mask(), &ent_self, rel),
                      layer.entity_norm, model, ctx);
    x = residual(x, multi_head_attention(x, concat_memory(mem, x), layer.self_attn, Mask(), &tok, rel),
                 layer.self_norm, model, ctx);
    if (with_entities)
      x = residual(x, multi_head_attention(x, ents, layer.entity_cross_attn, Mask(), &tok_ent, rel),
                   layer.entity_cross_norm, model, ctx);
    x = residual(x, feed_forward(x, layer.ffn), layer.ffn_norm, model, ctx);
  }

  SegmentOutput out;
  out.states = x;
  out.memory = update_memory(memory, layer_inputs, xl ? cfg.memory_len : 0);
  return out;
}

Tensor encode_article(const Summarizer& model, std::span<const int> ids,
                      std::span<const EntityMention> entities, ForwardContext& ctx) {
  if (ids.empty()) throw ConfigError("encode_article: empty article");
  const ModelConfig& cfg = model.config();
  const std::size_t seg_len = cfg.backbone == Backbone::kXl
                                  ? static_cast<std::size_t>(cfg.segment_len)
                                  : ids.size();
  std::vector<Tensor> outputs;
  SegmentMemory memory;
  memory.capacity = cfg.memory_len;
  for (std::size_t start = 0; start < ids.size(); start += seg_len) {
    const std::size_t count = std::min(seg_len, ids.size() - start);
    std::vector<EntityMention> seg_entities;
    for (const EntityMention& e : entities)
      if (e.position >= static_cast<int>(start) && e.position < static_cast<int>(start + count))
        seg_entities.push_back(e);
    Tensor inputs = maybe_dropout(
        embed_tokens(model, ids.subspan(start, count), static_cast<int>(start)), model, ctx);
    SegmentOutput seg = encode_segment(model, inputs, static_cast<int>(start), seg_entities,
                                       memory, ctx);
    outputs.push_back(seg.states);
    memory = std::move(seg.memory);
  }
  if (outputs.size() == 1) return outputs.front();
  return concat_rows(outputs);
}

// ---------------------------------------------------------------------------
// Decoder

Tensor decode_forward(const Summarizer& model, const Tensor& encoder_states,
                      std::span<const int> input_ids, const DecoderEntityPlan& plan,
                      ForwardContext& ctx) {
  const ModelConfig& cfg = model.config();
  const auto t = static_cast<Eigen::Index>(input_ids.size());
  if (t == 0) throw ConfigError("decode_forward: empty target prefix");
  const bool xl = cfg.backbone == Backbone::kXl;
  const RelativePositionalEncoding* rel = xl ? &model.relative_pe() : nullptr;

  // Rows that can see at least one entity take part in sublayer 2.
  std::vector<int> entity_rows;
  const bool with_entities = model.uses_entities() && !plan.entities.empty();
  if (with_entities) {
    if (plan.visible.rows() != t || plan.visible.cols() != static_cast<Eigen::Index>(plan.entities.size()))
      throw ShapeError("decode_forward: entity plan does not match the prefix");
    for (Eigen::Index i = 0; i < t; ++i)
      if (plan.visible.row(i).any()) entity_rows.push_back(static_cast<int>(i));
  }
  Tensor ents;
  Mask ent_visible;
  Positions tok_ent;
  std::vector<int> merge;
  if (!entity_rows.empty()) {
    std::vector<int> ids, starts;
    for (const DecoderEntity& e : plan.entities) {
      ids.push_back(e.entity_id);
      starts.push_back(e.start);
    }
    ents = maybe_dropout(embed_entities(model, ids, starts), model, ctx);
    ent_visible.resize(static_cast<Eigen::Index>(entity_rows.size()), plan.visible.cols());
    for (std::size_t r = 0; r < entity_rows.size(); ++r)
      ent_visible.row(static_cast<Eigen::Index>(r)) = plan.visible.row(entity_rows[r]);
    tok_ent.query = entity_rows;
    tok_ent.key = starts;
    // Row i of [y; updated] to pick for output row i.
    merge.resize(static_cast<std::size_t>(t));
    for (Eigen::Index i = 0; i < t; ++i) merge[static_cast<std::size_t>(i)] = static_cast<int>(i);
    for (std::size_t r = 0; r < entity_rows.size(); ++r)
      merge[static_cast<std::size_t>(entity_rows[r])] = static_cast<int>(t + static_cast<Eigen::Index>(r));
  }

  const Mask causal = causal_mask(t);
  const Positions self_pos = Positions::with_memory(t, 0);
  const Positions cross_pos = Positions::ranges(0, t, 0, encoder_states.rows());

  Tensor y = maybe_dropout(embed_tokens(model, input_ids, 0), model, ctx);
  for (const DecoderLayer& layer : model.decoder()) {
    y = residual(y, multi_head_attention(y, y, layer.self_attn, causal, &self_pos, rel),
                 layer.self_norm, model, ctx);
    if (!entity_rows.empty()) {
      Tensor q = gather_rows(y, entity_rows);
      Tensor updated = residual(
          q, multi_head_attention(q, ents, layer.entity_attn, ent_visible, &tok_ent, rel),
          layer.entity_norm, model, ctx);
      std::vector<Tensor> both{y, updated};
      y = gather_rows(concat_rows(both), merge);
    }
    y = residual(y, multi_head_attention(y, encoder_states, layer.cross_attn, Mask(), &cross_pos, rel),
                 layer.cross_norm, model, ctx);
    y = residual(y, multi_head_attention(y, y, layer.second_self_attn, causal, &self_pos, rel),
                 layer.second_self_norm, model, ctx);
    y = residual(y, feed_forward(y, layer.ffn), layer.ffn_norm, model, ctx);
  }
  return matmul(y, transpose(model.token_embedding()));
}

DecoderCache make_decoder_cache(const Summarizer& model) {
  DecoderCache cache;
  const auto d = model.config().d_model;
  cache.self_keys.assign(model.decoder().size(), Matrix(0, d));
  cache.second_keys.assign(model.decoder().size(), Matrix(0, d));
  return cache;
}

Vector decode_step(const Summarizer& model, const Tensor& encoder_states, int input_id,
                   std::span<const DecoderEntity> visible_entities, DecoderCache& cache) {
  NoGradGuard no_grad;
  ForwardContext eval;
  const ModelConfig& cfg = model.config();
  const bool xl = cfg.backbone == Backbone::kXl;
  const RelativePositionalEncoding* rel = xl ? &model.relative_pe() : nullptr;
  const int i = cache.length;
  const int ids[1] = {input_id};

  Tensor ents;
  Positions tok_ent;
  const bool with_entities = model.uses_entities() && !visible_entities.empty();
  if (with_entities) {
    std::vector<int> ent_ids, starts;
    for (const DecoderEntity& e : visible_entities) {
      ent_ids.push_back(e.entity_id);
      starts.push_back(e.start);
    }
    ents = embed_entities(model, ent_ids, starts);
    tok_ent.query = {i};
    tok_ent.key = starts;
  }
  const Positions self_pos = Positions::with_memory(1, i);
  const Positions cross_pos = Positions::ranges(i, 1, 0, encoder_states.rows());

  Tensor y = embed_tokens(model, ids, i);
  for (std::size_t l = 0; l < model.decoder().size(); ++l) {
    const DecoderLayer& layer = model.decoder()[l];
    Tensor keys = concat_memory(cache.self_keys[l], y);
    cache.self_keys[l] = keys.value();
    y = residual(y, multi_head_attention(y, keys, layer.self_attn, Mask(), &self_pos, rel),
                 layer.self_norm, model, eval);
    if (with_entities)
      y = residual(y, multi_head_attention(y, ents, layer.entity_attn, Mask(), &tok_ent, rel),
                   layer.entity_norm, model, eval);
    y = residual(y, multi_head_attention(y, encoder_states, layer.cross_attn, Mask(), &cross_pos, rel),
                 layer.cross_norm, model, eval);
    Tensor keys2 = concat_memory(cache.second_keys[l], y);
    cache.second_keys[l] = keys2.value();
    y = residual(y, multi_head_attention(y, keys2, layer.second_self_attn, Mask(), &self_pos, rel),
                 layer.second_self_norm, model, eval);
    y = residual(y, feed_forward(y, layer.ffn), layer.ffn_norm, model, eval);
  }
  ++cache.length;
  return matmul(y, transpose(model.token_embedding())).value();
}

// ---------------------------------------------------------------------------
// Examples and loss

Example make_example(const Summarizer& model, const LinkedDocument& article,
                     std::span<const std::string> summary_tokens,
                     const Gazetteer* gazetteer, int max_src, int max_tgt,
                     int entity_min_tokens) {
  if (summary_tokens.empty()) throw ConfigError("model_loss: empty summary");
  if (article.tokens.empty()) throw ConfigError("model_loss: empty article");
  Example ex;
  const std::size_t src = std::min(article.tokens.size(), static_cast<std::size_t>(max_src));
  ex.article_ids = model.vocab().encode(std::span(article.tokens).first(src));
  if (model.uses_entities())
    for (const EntitySpan& s : article.spans)
      if (s.end <= static_cast<int>(src)) ex.article_entities.push_back({s.entity_id, s.start});

  const std::size_t tgt = std::min(summary_tokens.size(), static_cast<std::size_t>(max_tgt));
  ex.summary_tokens.assign(summary_tokens.begin(), summary_tokens.begin() + static_cast<long>(tgt));
  const std::vector<int> ids = model.vocab().encode(ex.summary_tokens);
  ex.decoder_inputs.push_back(Vocabulary::kBos);
  ex.decoder_inputs.insert(ex.decoder_inputs.end(), ids.begin(), ids.end());
  ex.targets = ids;
  ex.targets.push_back(Vocabulary::kEos);
  if (model.uses_entities())
    ex.plan = plan_decoder_entities(ex.summary_tokens, static_cast<int>(ex.decoder_inputs.size()),
                                    gazetteer, entity_min_tokens);
  return ex;
}

Tensor example_logits(const Summarizer& model, const Example& example, ForwardContext& ctx) {
  Tensor enc = encode_article(model, example.article_ids, example.article_entities, ctx);
  return decode_forward(model, enc, example.decoder_inputs, example.plan, ctx);
}

Tensor model_loss(const Summarizer& model, const Example& example, ForwardContext& ctx) {
  return cross_entropy(example_logits(model, example, ctx), example.targets);
}

}  // namespace entsum
