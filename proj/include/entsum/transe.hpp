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

// TransE knowledge-graph embeddings: a fact (h, l, t) is scored by
// ||h + l - t||_2 and trained with a margin ranking hinge against corrupted
// facts, keeping every entity vector on the unit sphere.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "entsum/errors.hpp"
#include "entsum/kernels.hpp"
#include "entsum/rng.hpp"

namespace entsum {

struct Triple {
  int head = 0;
  int relation = 0;
  int tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct KnowledgeGraph {
  int entity_count = 0;
  int relation_count = 0;
  std::vector<Triple> triples;
  std::vector<std::string> entity_names;  // may be empty

  // Throws ConfigError on out-of-range ids or duplicate triples.
  void validate() const;
};

struct TransEConfig {
  int dim = 16;
  double gamma = 1.0;
  double lr = 0.05;
  int epochs = 200;
  int batch_size = 8;
  std::uint64_t seed = 0;
};

struct TransEEmbeddings {
  Matrix entities;   // entity_count x dim, unit rows
  Matrix relations;  // relation_count x dim
};

struct TransETrainResult {
  TransEEmbeddings embeddings;
  std::vector<double> epoch_loss;  // summed hinge loss per epoch
};

// ||h + l - t||_2.
template <typename H, typename L, typename T>
double dissimilarity(const Eigen::MatrixBase<H>& h, const Eigen::MatrixBase<L>& l,
                     const Eigen::MatrixBase<T>& t);

// max(0, gamma + d_pos - d_neg).
inline double triple_margin_loss(double d_pos, double d_neg, double gamma) {
  return std::max(0.0, gamma + d_pos - d_neg);
}

// Replaces the head or the tail (fair coin) by a uniformly drawn different
// entity. The relation is never touched.
Triple corrupt_triple(const Triple& triple, const KnowledgeGraph& kg, Rng& rng);

// One positive with its sampled negative.
struct TriplePair {
  Triple positive;
  Triple negative;
};

// Summed hinge loss of a batch. When grad is non-null it receives the
// gradient with respect to both embedding tables (same shapes as emb).
double transe_batch_loss(const TransEEmbeddings& emb, std::span<const TriplePair> batch,
                         double gamma, TransEEmbeddings* grad);

// Called after every SGD step (and its renormalisation).
using TransEStepObserver = std::function<void(const TransEEmbeddings&)>;

TransETrainResult transe_train(const KnowledgeGraph& kg, const TransEConfig& config,
                               const TransEStepObserver& observer = {});

struct LinkPredictionResult {
  double mean_rank = 0.0;
  double hits_at_k = 0.0;
};

// Ranks each true tail among all entities by distance to h + l, ascending,
// ties by entity id. Ranks are 1-based.
LinkPredictionResult link_prediction_eval(const KnowledgeGraph& kg,
                                          const TransEEmbeddings& emb, int k);
LinkPredictionResult link_prediction_eval(std::span<const Triple> triples,
                                          const TransEEmbeddings& emb, int k);

// ---- file formats ----

// head<TAB>relation<TAB>tail per line, '#' comments.
std::vector<Triple> read_triples(const std::filesystem::path& path);
void write_triples(const std::filesystem::path& path, std::span<const Triple> triples);
// entity_id<TAB>name per line.
std::vector<std::string> read_entity_names(const std::filesystem::path& path);
void write_entity_names(const std::filesystem::path& path,
                        std::span<const std::string> names);
// Builds a graph from the two files; counts cover every id seen.
KnowledgeGraph load_knowledge_graph(const std::filesystem::path& triples,
                                    const std::filesystem::path& names = {});

// "#transe d=<dim> entities=<n>" header then one row per entity with
// 17 significant digits.
void write_embeddings(const std::filesystem::path& path, const Matrix& entities);
Matrix read_embeddings(const std::filesystem::path& path);

// ---- template definitions ----

template <typename H, typename L, typename T>
double dissimilarity(const Eigen::MatrixBase<H>& h, const Eigen::MatrixBase<L>& l,
                     const Eigen::MatrixBase<T>& t) {
  if (h.size() != l.size() || h.size() != t.size())
    throw ShapeError("dissimilarity: dimensions " + std::to_string(h.size()) + ", " +
                     std::to_string(l.size()) + ", " + std::to_string(t.size()));
  double s = 0.0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const double d = h(i) + l(i) - t(i);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace entsum
