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

// Synthetic corpora for desk-scale experiments.
//
// copy: random token articles "w<k>" of length 8..24; the summary is the
// first six tokens. No entities.
//
// entity_lookup: persons, teams and (with two relations) cities.
//   ids: persons 0..P-1, teams P..P+T-1, cities after that
//   relation 0 plays_for: (person, team), exactly one per person
//   relation 1 based_in:  (team, city), one city per team
//   article: "report : <First Last> scored today ."
//   summary: "<First Last> plays for <Team> ."
// The first n_train persons are training articles and the remaining
// n_heldout are held out. Team names never occur in articles, so the team
// can only be recovered through the person's entity vector.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "entsum/linker.hpp"
#include "entsum/train.hpp"
#include "entsum/transe.hpp"

namespace entsum {

enum class SyntheticTask { kCopy, kEntityLookup };

std::string to_string(SyntheticTask t);
SyntheticTask parse_synthetic_task(std::string_view s);

struct SyntheticTaskSpec {
  SyntheticTask task = SyntheticTask::kEntityLookup;
  int n_entities = 0;  // 0 derives P + T + C; otherwise must equal it
  int n_relations = 2;
  int n_train = 16;
  int n_heldout = 4;
  int vocab_size = 50;  // copy task only
  int n_teams = 10;
  std::uint64_t seed = 0;

  // Entity count implied by the other fields (0 for copy).
  int derived_entities() const;
  void validate() const;
};

struct SyntheticData {
  SyntheticTask task = SyntheticTask::kEntityLookup;
  std::vector<CorpusEntry> train;
  std::vector<CorpusEntry> heldout;
  KnowledgeGraph kg;
  Gazetteer gazetteer;
  std::vector<int> person_team;  // team entity id of each person
};

SyntheticData gen_synthetic(const SyntheticTaskSpec& spec);

// train.jsonl, heldout.jsonl, triples.tsv, entities.tsv, gazetteer.tsv.
void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data);
SyntheticData read_synthetic(const std::filesystem::path& dir);

}  // namespace entsum
