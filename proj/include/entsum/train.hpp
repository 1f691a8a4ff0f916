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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "entsum/config.hpp"
#include "entsum/linker.hpp"
#include "entsum/model.hpp"
#include "entsum/vocab.hpp"

namespace entsum {

// One line of a corpus file: {"article": "...", "summary": "..."}.
struct CorpusEntry {
  std::string article;
  std::string summary;
};

std::vector<CorpusEntry> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, std::span<const CorpusEntry> entries);

// Vocabulary over the tokens of every article and summary.
Vocabulary build_vocabulary(std::span<const CorpusEntry> corpus);

// Tokenises, links articles, and truncates to the training lengths. Entries
// with an empty article or summary are rejected with ConfigError.
std::vector<Example> prepare_examples(const Summarizer& model,
                                      std::span<const CorpusEntry> corpus,
                                      const Gazetteer* gazetteer, int max_src, int max_tgt,
                                      int entity_min_tokens);

// Called after every optimizer step with the 1-based step and batch loss.
using StepObserver = std::function<void(int step, double loss)>;

// BERTAdam over mini-batches drawn from a seeded reshuffle of the examples
// every epoch. Gradients of a batch are averaged before each step. Returns
// the per-step mean batch loss.
std::vector<double> train_summarizer(Summarizer& model, std::span<const Example> examples,
                                     const TrainConfig& config,
                                     const StepObserver& observer = {});

struct TeacherForcedStats {
  double loss = 0.0;      // mean per-token cross-entropy
  double accuracy = 0.0;  // fraction of argmax predictions equal to the target
  std::size_t tokens = 0;
};

TeacherForcedStats evaluate_teacher_forced(const Summarizer& model,
                                           std::span<const Example> examples);

// CSV "step,loss".
void write_loss_trace(const std::filesystem::path& path, std::span<const double> losses);

}  // namespace entsum
