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

// Beam search and greedy decoding over any incremental scorer.
//
// A scorer exposes
//   State start() const;                       state after feeding <bos>
//   void advance(State&, int token) const;     feed one generated token
//   const Vector& next_logits(const State&);   logits for the next token
//   int eos() const;
// Hypotheses are ranked by their sum of log-probabilities, optionally divided
// by length^length_penalty.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <vector>

#include "entsum/config.hpp"
#include "entsum/kernels.hpp"
#include "entsum/model.hpp"

namespace entsum {

template <typename S>
concept IncrementalScorer = requires(const S& s, typename S::State& st, int token) {
  { s.start() } -> std::same_as<typename S::State>;
  s.advance(st, token);
  { s.next_logits(st) } -> std::convertible_to<const Vector&>;
  { s.eos() } -> std::convertible_to<int>;
};

struct Hypothesis {
  std::vector<int> tokens;  // ends with <eos> when finished
  double logprob = 0.0;
  bool finished = false;
};

// Log-probabilities of the next token with length constraints applied:
// <eos> is excluded while fewer than min_len tokens have been generated, and
// is the only choice once max_len tokens have. The softmax is taken over the
// allowed tokens only; excluded entries are -inf.
template <typename Derived>
Vector constrained_log_probs(const Eigen::MatrixBase<Derived>& logits, int generated,
                             int eos, const DecodeConfig& cfg) {
  const auto n = logits.size();
  Vector out(n);
  const double ninf = -std::numeric_limits<double>::infinity();
  auto allowed = [&](Eigen::Index v) {
    if (generated >= cfg.max_len) return v == eos;
    if (generated < cfg.min_len) return v != eos;
    return true;
  };
  double peak = ninf;
  for (Eigen::Index v = 0; v < n; ++v)
    if (allowed(v)) peak = std::max(peak, static_cast<double>(logits(v)));
  double total = 0.0;
  for (Eigen::Index v = 0; v < n; ++v)
    if (allowed(v)) total += std::exp(static_cast<double>(logits(v)) - peak);
  const double log_z = peak + std::log(total);
  for (Eigen::Index v = 0; v < n; ++v)
    out(v) = allowed(v) ? static_cast<double>(logits(v)) - log_z : ninf;
  return out;
}

// Log-probabilities of the surviving beam after each expansion, best first.
struct BeamTrace {
  std::vector<std::vector<double>> steps;
};

inline double hypothesis_score(double logprob, std::size_t length, double length_penalty) {
  if (length_penalty == 0.0 || length == 0) return logprob;
  return logprob / std::pow(static_cast<double>(length), length_penalty);
}

template <IncrementalScorer S>
Hypothesis beam_search(const S& scorer, const DecodeConfig& cfg, BeamTrace* trace = nullptr) {
  if (cfg.beam_width < 1) throw ConfigError("beam_width must be at least 1");
  if (cfg.min_len < 0 || cfg.max_len < cfg.min_len)
    throw ConfigError("need 0 <= min_len <= max_len");
  struct Live {
    Hypothesis hyp;
    typename S::State state;
  };
  struct Candidate {
    std::size_t parent;
    int token;
    double logprob;
    double score;
  };
  const int eos = scorer.eos();
  std::vector<Live> beam;
  beam.push_back({Hypothesis{}, scorer.start()});
  std::vector<Hypothesis> finished;

  auto lex_less = [&](const Candidate& a, const Candidate& b) {
    const auto& ta = beam[a.parent].hyp.tokens;
    const auto& tb = beam[b.parent].hyp.tokens;
    const auto n = std::min(ta.size(), tb.size());
    for (std::size_t i = 0; i < n; ++i)
      if (ta[i] != tb[i]) return ta[i] < tb[i];
    if (ta.size() != tb.size()) {
      // The shorter prefix continues with its candidate token.
      const int next_a = ta.size() < tb.size() ? a.token : ta[n];
      const int next_b = ta.size() < tb.size() ? tb[n] : b.token;
      if (next_a != next_b) return next_a < next_b;
      return ta.size() < tb.size();
    }
    return a.token < b.token;
  };

  while (!beam.empty()) {
    std::vector<Candidate> cands;
    for (std::size_t b = 0; b < beam.size(); ++b) {
      const Vector lp = constrained_log_probs(
          scorer.next_logits(beam[b].state), static_cast<int>(beam[b].hyp.tokens.size()),
          eos, cfg);
      for (Eigen::Index v = 0; v < lp.size(); ++v)
        if (std::isfinite(lp(v))) {
          const double logprob = beam[b].hyp.logprob + lp(v);
          cands.push_back({b, static_cast<int>(v), logprob,
                           hypothesis_score(logprob, beam[b].hyp.tokens.size() + 1,
                                            cfg.length_penalty)});
        }
    }
    const auto keep = std::min<std::size_t>(cands.size(), cfg.beam_width);
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep),
                      cands.end(), [&](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        return lex_less(a, b);
                      });
    std::vector<Live> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = cands[i];
      Hypothesis h = beam[c.parent].hyp;
      h.tokens.push_back(c.token);
      h.logprob = c.logprob;
      if (c.token == eos) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        typename S::State st = beam[c.parent].state;
        scorer.advance(st, c.token);
        next.push_back({std::move(h), std::move(st)});
      }
    }
    beam = std::move(next);
    if (trace) {
      std::vector<double> step;
      for (const auto& l : beam) step.push_back(l.hyp.logprob);
      trace->steps.push_back(std::move(step));
    }
    if (cfg.length_penalty == 0.0 && !finished.empty() && !beam.empty()) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& f : finished) best = std::max(best, f.logprob);
      // Extending a live hypothesis can only lower its score.
      if (best > beam.front().hyp.logprob) break;
    }
  }
  if (finished.empty()) throw ConfigError("beam search produced no finished hypothesis");
  auto score = [&](const Hypothesis& h) {
    return hypothesis_score(h.logprob, h.tokens.size(), cfg.length_penalty);
  };
  return *std::min_element(finished.begin(), finished.end(),
                           [&](const Hypothesis& a, const Hypothesis& b) {
                             if (score(a) != score(b)) return score(a) > score(b);
                             return a.tokens < b.tokens;
                           });
}

// Picks the most probable allowed token at every step; ties go to the
// smallest id.
template <IncrementalScorer S>
Hypothesis greedy_decode(const S& scorer, const DecodeConfig& cfg) {
  if (cfg.min_len < 0 || cfg.max_len < cfg.min_len)
    throw ConfigError("need 0 <= min_len <= max_len");
  const int eos = scorer.eos();
  Hypothesis h;
  auto state = scorer.start();
  for (;;) {
    const Vector lp = constrained_log_probs(scorer.next_logits(state),
                                            static_cast<int>(h.tokens.size()), eos, cfg);
    Eigen::Index best = 0;
    for (Eigen::Index v = 1; v < lp.size(); ++v)
      if (lp(v) > lp(best)) best = v;
    h.tokens.push_back(static_cast<int>(best));
    h.logprob += lp(best);
    if (best == eos) {
      h.finished = true;
      return h;
    }
    scorer.advance(state, static_cast<int>(best));
  }
}

// Scorer backed by a trained summarizer and one encoded article. Decoder
// entity attention follows the same causal linking rule as training.
class SummarizerScorer {
 public:
  struct State {
    DecoderCache cache;
    std::vector<std::string> generated;
    Vector logits;
  };

  SummarizerScorer(const Summarizer& model, Tensor encoder_states,
                   const Gazetteer* gazetteer, int entity_min_tokens);

  State start() const;
  void advance(State& state, int token) const;
  const Vector& next_logits(const State& state) const { return state.logits; }
  int eos() const { return Vocabulary::kEos; }

 private:
  const Summarizer& model_;
  Tensor encoder_states_;
  const Gazetteer* gazetteer_;
  int entity_min_tokens_;
};

// Tokens and entity mentions the encoder sees for a linked article, after
// truncation to max_src tokens.
std::vector<int> article_ids(const Summarizer& model, const LinkedDocument& article,
                             int max_src);
std::vector<EntityMention> article_mentions(const Summarizer& model,
                                            const LinkedDocument& article, int max_src);

// Encodes the article and runs beam search (beam_width 1 is still beam
// search, not greedy). The returned tokens exclude the final <eos>.
std::vector<std::string> summarize_article(const Summarizer& model,
                                           const LinkedDocument& article,
                                           const Gazetteer* gazetteer,
                                           const DecodeConfig& cfg, int max_src);

}  // namespace entsum
