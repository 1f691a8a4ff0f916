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

// Backbone x entity-mode grid on the entity_lookup task. Every
// configuration trains on the same data with the same seeds and is scored
// on held-out persons by teacher-forced loss and by whether the team token
// is the argmax prediction at its position.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "entsum/config.hpp"
#include "entsum/synthetic.hpp"
#include "entsum/transe.hpp"

namespace entsum {

struct AblationVariant {
  std::string name;
  Backbone backbone;
  EntityMode entity_mode;
};

// vanilla_off, vanilla_random, vanilla_kg, xl_kg.
std::vector<AblationVariant> ablation_variants();

struct AblationSpec {
  std::vector<std::uint64_t> seeds;
  RunConfig base;        // model/train settings shared by every variant
  TransEConfig transe;   // seed is replaced by each run's seed
};

struct AblationRow {
  std::string config;
  std::uint64_t seed = 0;
  double heldout_loss = 0.0;
  double team_token_acc = 0.0;
};

struct AblationAggregate {
  std::string config;
  double mean = 0.0;
  double stdev = 0.0;  // sample standard deviation; 0 for one seed
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::vector<AblationAggregate> aggregates;  // of team_token_acc
};

using AblationProgress = std::function<void(const AblationRow&)>;

AblationResult run_ablation(const SyntheticData& data, const AblationSpec& spec,
                            const AblationProgress& progress = {});

const AblationAggregate& find_aggregate(const AblationResult& result, const std::string& config);

// Rows "config,seed,heldout_loss,team_token_acc", then a "config,mean,stdev"
// header and one aggregate row per configuration.
void write_ablation_csv(const std::filesystem::path& path, const AblationResult& result);

}  // namespace entsum
