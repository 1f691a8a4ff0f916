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

// Model, training, and decoding configuration plus the two named presets.
// Config files are plain `key = value` lines using the field names below;
// '#' starts a comment.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "entsum/attention.hpp"

namespace entsum {

enum class EntityMode { kOff, kRandom, kKg };

std::string to_string(Backbone b);
std::string to_string(EntityMode m);
Backbone parse_backbone(std::string_view s);
EntityMode parse_entity_mode(std::string_view s);

struct ModelConfig {
  int n_layers = 2;
  int n_heads = 4;
  int d_model = 32;
  int d_ent = 16;
  double dropout = 0.0;
  int vocab_size = 0;    // taken from the vocabulary when the model is built
  int entity_count = 0;  // rows of the entity input table
  int L_max = 64;
  int segment_len = 16;
  int memory_len = 16;
  Backbone backbone = Backbone::kXl;
  EntityMode entity_mode = EntityMode::kKg;
  int conversion_layers = 2;
  int d_ff = 64;
  double ln_eps = 1e-6;

  void validate() const;
  int d_head() const { return d_model / n_heads; }
};

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
  double weight_decay = 0.01;
  int steps = 1000;
  int batch_size = 4;
  std::uint64_t seed = 0;
  int max_src = 48;
  int max_tgt_train = 24;
  int max_tgt_test = 24;

  void validate() const;
};

struct DecodeConfig {
  int beam_width = 3;
  int min_len = 2;
  int max_len = 20;
  int entity_min_tokens = 20;
  // Hypotheses are ranked by logprob / length^length_penalty; 0 disables
  // length normalisation.
  double length_penalty = 0.0;

  void validate() const;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DecodeConfig decode;
};

// "paper" carries the published hyperparameters; "toy" is the desk-scale
// setting used by the tests.
RunConfig preset(std::string_view name);

// Throws ConfigError for unknown keys or malformed values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

// key=value lines for every ModelConfig field, and the inverse.
std::string model_config_to_text(const ModelConfig& config);
ModelConfig model_config_from_text(std::string_view text);

}  // namespace entsum
