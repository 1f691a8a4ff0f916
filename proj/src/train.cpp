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

#include "entsum/train.hpp"

#include <json.hpp>
#include <numeric>

#include "entsum/io.hpp"
#include "entsum/optim.hpp"

namespace entsum {

std::vector<CorpusEntry> read_corpus(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::vector<CorpusEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(io::location(path, lineno) + ": malformed JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("article") || !j.contains("summary") ||
        !j["article"].is_string() || !j["summary"].is_string())
      throw ConfigError(io::location(path, lineno) +
                        ": expected string fields \"article\" and \"summary\"");
    out.push_back({j["article"].get<std::string>(), j["summary"].get<std::string>()});
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, std::span<const CorpusEntry> entries) {
  auto out = io::open_output(path);
  for (const auto& e : entries)
    out << nlohmann::json{{"article", e.article}, {"summary", e.summary}}.dump() << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Vocabulary build_vocabulary(std::span<const CorpusEntry> corpus) {
  std::vector<std::vector<std::string>> docs;
  for (const auto& e : corpus) {
    docs.push_back(tokenize(e.article));
    docs.push_back(tokenize(e.summary));
  }
  return Vocabulary::build(docs);
}

std::vector<Example> prepare_examples(const Summarizer& model,
                                      std::span<const CorpusEntry> corpus,
                                      const Gazetteer* gazetteer, int max_src, int max_tgt,
                                      int entity_min_tokens) {
  std::vector<Example> out;
  out.reserve(corpus.size());
  const Gazetteer* gaz = model.uses_entities() ? gazetteer : nullptr;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    LinkedDocument doc = gaz ? link_document(corpus[i].article, *gaz)
                             : LinkedDocument{tokenize(corpus[i].article), {}};
    const auto summary = tokenize(corpus[i].summary);
    try {
      out.push_back(make_example(model, doc, summary, gaz, max_src, max_tgt, entity_min_tokens));
    } catch (const ConfigError& e) {
      throw ConfigError("corpus entry " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::vector<double> train_summarizer(Summarizer& model, std::span<const Example> examples,
                                     const TrainConfig& config, const StepObserver& observer) {
  config.validate();
  if (examples.empty()) throw ConfigError("train_summarizer: no training examples");
  BertAdam optim(model.parameters(), config);
  Rng rng(config.seed);
  Rng dropout_rng = rng.split();
  ForwardContext ctx{model.config().dropout > 0.0 ? &dropout_rng : nullptr};

  std::vector<std::size_t> order(examples.size());
  std::size_t cursor = order.size();
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(config.steps));
  for (int step = 1; step <= config.steps; ++step) {
    double batch_loss = 0.0;
    for (int b = 0; b < config.batch_size; ++b) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        cursor = 0;
      }
      const Example& ex = examples[order[cursor++]];
      Tensor loss = scale(model_loss(model, ex, ctx), 1.0 / config.batch_size);
      backward(loss);
      batch_loss += loss.item();
    }
    optim.step();
    losses.push_back(batch_loss);
    if (observer) observer(step, batch_loss);
  }
  return losses;
}

TeacherForcedStats evaluate_teacher_forced(const Summarizer& model,
                                           std::span<const Example> examples) {
  NoGradGuard no_grad;
  ForwardContext ctx;
  TeacherForcedStats stats;
  double total = 0.0;
  std::size_t correct = 0;
  for (const Example& ex : examples) {
    const Matrix logits = example_logits(model, ex, ctx).value();
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const auto row = logits.row(i);
      const double peak = row.maxCoeff();
      const double log_z = peak + std::log((row.array() - peak).exp().sum());
      const int target = ex.targets[static_cast<std::size_t>(i)];
      total += log_z - row(target);
      Eigen::Index arg;
      row.maxCoeff(&arg);
      if (arg == target) ++correct;
    }
    stats.tokens += static_cast<std::size_t>(logits.rows());
  }
  if (stats.tokens > 0) {
    stats.loss = total / static_cast<double>(stats.tokens);
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(stats.tokens);
  }
  return stats;
}

void write_loss_trace(const std::filesystem::path& path, std::span<const double> losses) {
  auto out = io::open_output(path);
  out << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i)
    out << (i + 1) << ',' << io::format_double(losses[i]) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace entsum
