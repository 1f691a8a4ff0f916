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

#include "entsum/synthetic.hpp"

#include <numeric>

#include "entsum/io.hpp"

namespace entsum {
namespace {

constexpr const char* kFirstNames[] = {
    "Ada",   "Bruno", "Clara", "Dmitri", "Elena", "Farid", "Greta",  "Hugo",
    "Irene", "Jonas", "Keiko", "Lars",   "Mira",  "Nils",  "Olga",   "Pablo",
    "Quinn", "Rosa",  "Sven",  "Tomas",  "Uma",   "Vera",  "Wendel", "Yara"};
constexpr const char* kLastNames[] = {
    "Abbott", "Berger", "Castro",  "Dalton", "Eklund", "Fischer", "Garcia", "Holm",
    "Ibsen",  "Jensen", "Kowalski", "Lind",  "Moreau", "Novak",   "Ortega", "Petrov",
    "Quist",  "Rossi",  "Sato",    "Tanaka", "Ulrich", "Varga",   "Weber",  "Young"};
constexpr const char* kTeams[] = {"Falcons", "Otters",  "Comets", "Ravens",  "Wolves",
                                  "Hornets", "Pilots",  "Titans", "Sharks",  "Rockets",
                                  "Bison",   "Vipers",  "Lynx",   "Herons",  "Mustangs",
                                  "Dragons"};
constexpr const char* kCities[] = {"Avalon",   "Brookport", "Cedarville", "Dunmore",
                                   "Elmstead", "Fairhaven", "Glenrock",   "Harborview",
                                   "Ironwood", "Juniper",   "Kingsbay",   "Lakemont",
                                   "Millbrook", "Northgate", "Oakridge",  "Pinecrest"};

constexpr int kRelPlaysFor = 0;
constexpr int kRelBasedIn = 1;

int city_count(const SyntheticTaskSpec& s) {
  return s.n_relations >= 2 ? s.n_teams : 0;
}

SyntheticData gen_copy(const SyntheticTaskSpec& spec) {
  SyntheticData d;
  d.task = SyntheticTask::kCopy;
  Rng rng(spec.seed);
  auto make = [&] {
    const int len = 8 + static_cast<int>(rng.uniform_int(17));
    std::vector<std::string> words;
    for (int i = 0; i < len; ++i)
      words.push_back("w" + std::to_string(rng.uniform_int(static_cast<std::uint64_t>(spec.vocab_size))));
    CorpusEntry e;
    e.article = join_tokens(words);
    e.summary = join_tokens(std::span(words).first(6));
    return e;
  };
  for (int i = 0; i < spec.n_train; ++i) d.train.push_back(make());
  for (int i = 0; i < spec.n_heldout; ++i) d.heldout.push_back(make());
  return d;
}

SyntheticData gen_lookup(const SyntheticTaskSpec& spec) {
  SyntheticData d;
  Rng rng(spec.seed);
  const int persons = spec.n_train + spec.n_heldout;
  const int teams = spec.n_teams;
  const int cities = city_count(spec);

  std::vector<std::string> names;
  for (const char* f : kFirstNames)
    for (const char* l : kLastNames) names.push_back(std::string(f) + " " + l);
  rng.shuffle(names);
  names.resize(static_cast<std::size_t>(persons));

  std::vector<int> assignment(static_cast<std::size_t>(persons));
  for (int i = 0; i < persons; ++i) assignment[static_cast<std::size_t>(i)] = i % teams;
  rng.shuffle(assignment);

  KnowledgeGraph& kg = d.kg;
  kg.entity_count = persons + teams + cities;
  kg.relation_count = spec.n_relations;
  kg.entity_names = names;
  for (int t = 0; t < teams; ++t) kg.entity_names.push_back(kTeams[t]);
  for (int c = 0; c < cities; ++c) kg.entity_names.push_back(kCities[c]);
  for (int p = 0; p < persons; ++p) {
    const int team = persons + assignment[static_cast<std::size_t>(p)];
    kg.triples.push_back({p, kRelPlaysFor, team});
    d.person_team.push_back(team);
  }
  for (int t = 0; t < teams && cities > 0; ++t)
    kg.triples.push_back({persons + t, kRelBasedIn, persons + teams + t});
  kg.validate();

  for (int e = 0; e < kg.entity_count; ++e)
    d.gazetteer.add(kg.entity_names[static_cast<std::size_t>(e)], e);

  for (int p = 0; p < persons; ++p) {
    const std::string& name = names[static_cast<std::size_t>(p)];
    const std::string& team = kg.entity_names[static_cast<std::size_t>(d.person_team[p])];
    CorpusEntry e{"report : " + name + " scored today .", name + " plays for " + team + " ."};
    (p < spec.n_train ? d.train : d.heldout).push_back(std::move(e));
  }
  return d;
}

}  // namespace

std::string to_string(SyntheticTask t) {
  return t == SyntheticTask::kCopy ? "copy" : "entity_lookup";
}

SyntheticTask parse_synthetic_task(std::string_view s) {
  if (s == "copy") return SyntheticTask::kCopy;
  if (s == "entity_lookup") return SyntheticTask::kEntityLookup;
  throw ConfigError("unknown task '" + std::string(s) + "' (expected copy or entity_lookup)");
}

int SyntheticTaskSpec::derived_entities() const {
  if (task == SyntheticTask::kCopy) return 0;
  return n_train + n_heldout + n_teams + city_count(*this);
}

void SyntheticTaskSpec::validate() const {
  if (n_train < 0 || n_heldout < 0) throw ConfigError("synthetic: negative corpus size");
  if (task == SyntheticTask::kCopy) {
    if (vocab_size < 1) throw ConfigError("synthetic: copy task needs vocab_size >= 1");
    return;
  }
  if (n_relations < 1 || n_relations > 2)
    throw ConfigError("synthetic: entity_lookup supports 1 or 2 relations");
  constexpr int max_teams = static_cast<int>(std::size(kTeams));
  if (n_teams < 1 || n_teams > max_teams)
    throw ConfigError("synthetic: n_teams must be in [1, " + std::to_string(max_teams) + "]");
  constexpr int max_persons =
      static_cast<int>(std::size(kFirstNames) * std::size(kLastNames));
  if (n_train + n_heldout > max_persons)
    throw ConfigError("synthetic: at most " + std::to_string(max_persons) + " persons");
  if (n_entities != 0 && n_entities != derived_entities())
    throw ConfigError("synthetic: n_entities=" + std::to_string(n_entities) +
                      " but persons + teams + cities = " +
                      std::to_string(derived_entities()));
}

SyntheticData gen_synthetic(const SyntheticTaskSpec& spec) {
  spec.validate();
  return spec.task == SyntheticTask::kCopy ? gen_copy(spec) : gen_lookup(spec);
}

void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data) {
  write_corpus(dir / "train.jsonl", data.train);
  write_corpus(dir / "heldout.jsonl", data.heldout);
  write_triples(dir / "triples.tsv", data.kg.triples);
  write_entity_names(dir / "entities.tsv", data.kg.entity_names);
  data.gazetteer.save(dir / "gazetteer.tsv");
}

SyntheticData read_synthetic(const std::filesystem::path& dir) {
  SyntheticData d;
  d.train = read_corpus(dir / "train.jsonl");
  d.heldout = read_corpus(dir / "heldout.jsonl");
  d.kg = load_knowledge_graph(dir / "triples.tsv", dir / "entities.tsv");
  d.gazetteer = Gazetteer::load(dir / "gazetteer.tsv");
  d.task = d.kg.triples.empty() && d.gazetteer.size() == 0 ? SyntheticTask::kCopy
                                                             : SyntheticTask::kEntityLookup;
  d.person_team.assign(static_cast<std::size_t>(d.kg.entity_count), -1);
  for (const Triple& t : d.kg.triples)
    if (t.relation == kRelPlaysFor) d.person_team[static_cast<std::size_t>(t.head)] = t.tail;
  d.person_team.resize(d.train.size() + d.heldout.size());
  return d;
}

}  // namespace entsum
