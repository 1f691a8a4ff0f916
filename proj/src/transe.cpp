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

#include "entsum/transe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "entsum/errors.hpp"
#include "entsum/init.hpp"
#include "entsum/io.hpp"

namespace entsum {
namespace {

void normalize_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n > 0.0) m.row(i) /= n;
  }
}

// Adds sign * d||h + l - t|| / d(h, l, t) into grad.
void add_distance_gradient(const TransEEmbeddings& emb, const Triple& tr, double sign,
                           TransEEmbeddings& grad) {
  Vector diff = emb.entities.row(tr.head) + emb.relations.row(tr.relation) -
                emb.entities.row(tr.tail);
  const double n = diff.norm();
  if (n == 0.0) return;
  diff *= sign / n;
  grad.entities.row(tr.head) += diff;
  grad.relations.row(tr.relation) += diff;
  grad.entities.row(tr.tail) -= diff;
}

double distance(const TransEEmbeddings& emb, const Triple& tr) {
  return dissimilarity(emb.entities.row(tr.head), emb.relations.row(tr.relation),
                       emb.entities.row(tr.tail));
}

}  // namespace

void KnowledgeGraph::validate() const {
  if (entity_count < 0 || relation_count < 0)
    throw ConfigError("knowledge graph: negative vocabulary size");
  std::set<Triple> seen;
  for (const Triple& t : triples) {
    if (t.head < 0 || t.head >= entity_count || t.tail < 0 || t.tail >= entity_count)
      throw ConfigError("knowledge graph: entity id out of range in (" +
                        std::to_string(t.head) + ", " + std::to_string(t.relation) +
                        ", " + std::to_string(t.tail) + ")");
    if (t.relation < 0 || t.relation >= relation_count)
      throw ConfigError("knowledge graph: relation id " + std::to_string(t.relation) +
                        " out of range");
    if (!seen.insert(t).second)
      throw ConfigError("knowledge graph: duplicate triple (" + std::to_string(t.head) +
                        ", " + std::to_string(t.relation) + ", " +
                        std::to_string(t.tail) + ")");
  }
  if (!entity_names.empty() &&
      static_cast<int>(entity_names.size()) != entity_count)
    throw ConfigError("knowledge graph: " + std::to_string(entity_names.size()) +
                      " names for " + std::to_string(entity_count) + " entities");
}

Triple corrupt_triple(const Triple& triple, const KnowledgeGraph& kg, Rng& rng) {
  if (kg.entity_count < 2)
    throw ConfigError("corrupt_triple: need at least 2 entities, have " +
                      std::to_string(kg.entity_count));
  Triple out = triple;
  const bool replace_head = rng.bernoulli(0.5);
  int& slot = replace_head ? out.head : out.tail;
  const int original = slot;
  do {
    slot = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(kg.entity_count)));
  } while (slot == original);
  return out;
}

double transe_batch_loss(const TransEEmbeddings& emb, std::span<const TriplePair> batch,
                         double gamma, TransEEmbeddings* grad) {
  if (grad) {
    grad->entities = Matrix::Zero(emb.entities.rows(), emb.entities.cols());
    grad->relations = Matrix::Zero(emb.relations.rows(), emb.relations.cols());
  }
  double total = 0.0;
  for (const TriplePair& pair : batch) {
    const double loss =
        triple_margin_loss(distance(emb, pair.positive), distance(emb, pair.negative), gamma);
    total += loss;
    if (grad && loss > 0.0) {
      add_distance_gradient(emb, pair.positive, 1.0, *grad);
      add_distance_gradient(emb, pair.negative, -1.0, *grad);
    }
  }
  return total;
}

TransETrainResult transe_train(const KnowledgeGraph& kg, const TransEConfig& config,
                               const TransEStepObserver& observer) {
  if (kg.triples.empty()) throw ConfigError("transe_train: empty triple set");
  if (config.gamma <= 0.0) throw ConfigError("transe_train: gamma must be positive");
  if (config.dim <= 0 || config.batch_size <= 0 || config.epochs < 0)
    throw ConfigError("transe_train: dim and batch_size must be positive");
  kg.validate();

  Rng rng(config.seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(config.dim));
  TransETrainResult result;
  TransEEmbeddings& emb = result.embeddings;
  emb.entities = init::uniform(kg.entity_count, config.dim, bound, rng);
  emb.relations = init::uniform(kg.relation_count, config.dim, bound, rng);
  normalize_rows(emb.entities);

  std::vector<std::size_t> order(kg.triples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<TriplePair> batch;
  TransEEmbeddings grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        const Triple& pos = kg.triples[order[i]];
        batch.push_back({pos, corrupt_triple(pos, kg, rng)});
      }
      epoch_loss += transe_batch_loss(emb, batch, config.gamma, &grad);
      emb.entities -= config.lr * grad.entities;
      emb.relations -= config.lr * grad.relations;
      normalize_rows(emb.entities);
      if (observer) observer(emb);
    }
    result.epoch_loss.push_back(epoch_loss);
  }
  return result;
}

LinkPredictionResult link_prediction_eval(std::span<const Triple> triples,
                                          const TransEEmbeddings& emb, int k) {
  LinkPredictionResult r;
  if (triples.empty()) return r;
  double rank_sum = 0.0;
  std::size_t hits = 0;
  for (const Triple& t : triples) {
    const auto h = emb.entities.row(t.head);
    const auto l = emb.relations.row(t.relation);
    const double target = dissimilarity(h, l, emb.entities.row(t.tail));
    int rank = 1;
    for (Eigen::Index e = 0; e < emb.entities.rows(); ++e) {
      if (e == t.tail) continue;
      const double d = dissimilarity(h, l, emb.entities.row(e));
      if (d < target || (d == target && e < t.tail)) ++rank;
    }
    rank_sum += rank;
    if (rank <= k) ++hits;
  }
  r.mean_rank = rank_sum / static_cast<double>(triples.size());
  r.hits_at_k = static_cast<double>(hits) / static_cast<double>(triples.size());
  return r;
}

LinkPredictionResult link_prediction_eval(const KnowledgeGraph& kg,
                                          const TransEEmbeddings& emb, int k) {
  return link_prediction_eval(kg.triples, emb, k);
}

std::vector<Triple> read_triples(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::vector<Triple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = io::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto fields = io::split(text, '\t');
    if (fields.size() != 3)
      throw ConfigError(io::location(path, line_no) + ": expected 3 tab-separated ids");
    const std::string where = io::location(path, line_no);
    out.push_back({static_cast<int>(io::parse_int(fields[0], where)),
                   static_cast<int>(io::parse_int(fields[1], where)),
                   static_cast<int>(io::parse_int(fields[2], where))});
  }
  return out;
}

void write_triples(const std::filesystem::path& path, std::span<const Triple> triples) {
  auto out = io::open_output(path);
  out << "# head\trelation\ttail\n";
  for (const Triple& t : triples) out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
}

std::vector<std::string> read_entity_names(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::map<int, std::string> by_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ConfigError(io::location(path, line_no) + ": expected id<TAB>name");
    const int id = static_cast<int>(io::parse_int(line.substr(0, tab), io::location(path, line_no)));
    if (id < 0 || !by_id.emplace(id, line.substr(tab + 1)).second)
      throw ConfigError(io::location(path, line_no) + ": bad or repeated entity id");
  }
  std::vector<std::string> names(by_id.empty() ? 0 : static_cast<std::size_t>(by_id.rbegin()->first) + 1);
  for (auto& [id, name] : by_id) names[static_cast<std::size_t>(id)] = name;
  return names;
}

void write_entity_names(const std::filesystem::path& path,
                        std::span<const std::string> names) {
  auto out = io::open_output(path);
  for (std::size_t i = 0; i < names.size(); ++i) out << i << '\t' << names[i] << '\n';
}

KnowledgeGraph load_knowledge_graph(const std::filesystem::path& triples,
                                    const std::filesystem::path& names) {
  KnowledgeGraph kg;
  kg.triples = read_triples(triples);
  if (!names.empty()) {
    kg.entity_names = read_entity_names(names);
    kg.entity_count = static_cast<int>(kg.entity_names.size());
  }
  for (const Triple& t : kg.triples) {
    if (names.empty()) kg.entity_count = std::max({kg.entity_count, t.head + 1, t.tail + 1});
    kg.relation_count = std::max(kg.relation_count, t.relation + 1);
  }
  kg.validate();
  return kg;
}

void write_embeddings(const std::filesystem::path& path, const Matrix& entities) {
  auto out = io::open_output(path);
  out << "#transe d=" << entities.cols() << " entities=" << entities.rows() << '\n';
  for (Eigen::Index i = 0; i < entities.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < entities.cols(); ++j)
      out << '\t' << io::format_double(entities(i, j));
    out << '\n';
  }
}

Matrix read_embeddings(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError(path.string() + ": empty embedding file");
  int dim = -1, count = -1;
  if (std::sscanf(line.c_str(), "#transe d=%d entities=%d", &dim, &count) != 2 ||
      dim <= 0 || count < 0)
    throw ConfigError(io::location(path, 1) + ": bad header '" + line + "'");
  Matrix m(count, dim);
  std::vector<bool> filled(static_cast<std::size_t>(count), false);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (io::trim(line).empty()) continue;
    const std::string where = io::location(path, line_no);
    const auto fields = io::split(io::trim(line), '\t');
    if (static_cast<int>(fields.size()) != dim + 1)
      throw ConfigError(where + ": expected " + std::to_string(dim + 1) + " fields");
    const auto id = io::parse_int(fields[0], where);
    if (id < 0 || id >= count || filled[static_cast<std::size_t>(id)])
      throw ConfigError(where + ": bad or repeated entity id");
    filled[static_cast<std::size_t>(id)] = true;
    for (int j = 0; j < dim; ++j) m(id, j) = io::parse_double(fields[j + 1], where);
  }
  if (std::find(filled.begin(), filled.end(), false) != filled.end())
    throw ConfigError(path.string() + ": missing entity rows");
  return m;
}

}  // namespace entsum
