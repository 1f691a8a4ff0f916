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

#include "entsum/decode.hpp"

namespace entsum {

SummarizerScorer::SummarizerScorer(const Summarizer& model, Tensor encoder_states,
                                   const Gazetteer* gazetteer, int entity_min_tokens)
    : model_(model),
      encoder_states_(std::move(encoder_states)),
      gazetteer_(model.uses_entities() ? gazetteer : nullptr),
      entity_min_tokens_(entity_min_tokens) {}

SummarizerScorer::State SummarizerScorer::start() const {
  State s{make_decoder_cache(model_), {}, Vector()};
  s.logits = decode_step(model_, encoder_states_, Vocabulary::kBos, {}, s.cache);
  return s;
}

void SummarizerScorer::advance(State& state, int token) const {
  state.generated.push_back(model_.vocab().token(token));
  std::vector<DecoderEntity> visible;
  if (gazetteer_)
    visible = decoder_entities_for_prefix(state.generated, gazetteer_, entity_min_tokens_);
  state.logits = decode_step(model_, encoder_states_, token, visible, state.cache);
}

std::vector<int> article_ids(const Summarizer& model, const LinkedDocument& article,
                             int max_src) {
  const std::size_t n = std::min(article.tokens.size(), static_cast<std::size_t>(max_src));
  return model.vocab().encode(std::span(article.tokens).first(n));
}

std::vector<EntityMention> article_mentions(const Summarizer& model,
                                            const LinkedDocument& article, int max_src) {
  std::vector<EntityMention> out;
  if (!model.uses_entities()) return out;
  for (const EntitySpan& s : article.spans)
    if (s.end <= max_src) out.push_back({s.entity_id, s.start});
  return out;
}

std::vector<std::string> summarize_article(const Summarizer& model,
                                           const LinkedDocument& article,
                                           const Gazetteer* gazetteer,
                                           const DecodeConfig& cfg, int max_src) {
  if (article.tokens.empty()) throw ConfigError("summarize: empty article");
  NoGradGuard no_grad;
  ForwardContext ctx;
  const auto ids = article_ids(model, article, max_src);
  const auto mentions = article_mentions(model, article, max_src);
  SummarizerScorer scorer(model, encode_article(model, ids, mentions, ctx), gazetteer,
                          cfg.entity_min_tokens);
  Hypothesis h = beam_search(scorer, cfg);
  if (h.finished) h.tokens.pop_back();
  return model.vocab().decode(h.tokens);
}

}  // namespace entsum
