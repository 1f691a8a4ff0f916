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

#include "entsum/ablation.hpp"

#include <cmath>

#include "entsum/io.hpp"

namespace entsum {
namespace {

// Target index of the team token: the token after "for".
std::vector<std::size_t> team_positions(const std::vector<Example>& examples) {
  std::vector<std::size_t> out;
  for (const Example& ex : examples) {
    const auto& s = ex.summary_tokens;
    std::size_t pos = s.size();
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
      if (s[i] == "for") pos = i + 1;
    if (pos >= s.size()) throw ConfigError("ablation: summary without a team token");
    out.push_back(pos);
  }
  return out;
}

AblationRow run_variant(const SyntheticData& data, const AblationSpec& spec,
                        const AblationVariant& variant, std::uint64_t seed,
                        const Matrix& kg_table, const Matrix& random_table) {
  RunConfig cfg = spec.base;
  cfg.model.backbone = variant.backbone;
  cfg.model.entity_mode = variant.entity_mode;
  cfg.train.seed = seed;
  Matrix table;
  if (variant.entity_mode == EntityMode::kKg) table = kg_table;
  if (variant.entity_mode == EntityMode::kRandom) table = random_table;
  if (variant.entity_mode != EntityMode::kOff) cfg.model.d_ent = static_cast<int>(table.cols());

  Summarizer model(cfg.model, build_vocabulary(data.train), table, seed);
  const auto train = prepare_examples(model, data.train, &data.gazetteer, cfg.train.max_src,
                                      cfg.train.max_tgt_train, cfg.decode.entity_min_tokens);
  const auto heldout = prepare_examples(model, data.heldout, &data.gazetteer, cfg.train.max_src,
                                        cfg.train.max_tgt_test, cfg.decode.entity_min_tokens);
  train_summarizer(model, train, cfg.train);

  AblationRow row{variant.name, seed, evaluate_teacher_forced(model, heldout).loss, 0.0};
  const auto positions = team_positions(heldout);
  NoGradGuard no_grad;
  ForwardContext ctx;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < heldout.size(); ++i) {
    const Matrix logits = example_logits(model, heldout[i], ctx).value();
    Eigen::Index arg;
    logits.row(static_cast<Eigen::Index>(positions[i])).maxCoeff(&arg);
    if (arg == heldout[i].targets[positions[i]]) ++correct;
  }
  if (!heldout.empty())
    row.team_token_acc = static_cast<double>(correct) / static_cast<double>(heldout.size());
  return row;
}

}  // namespace

std::vector<AblationVariant> ablation_variants() {
  return {{"vanilla_off", Backbone::kVanilla, EntityMode::kOff},
          {"vanilla_random", Backbone::kVanilla, EntityMode::kRandom},
          {"vanilla_kg", Backbone::kVanilla, EntityMode::kKg},
          {"xl_kg", Backbone::kXl, EntityMode::kKg}};
}

AblationResult run_ablation(const SyntheticData& data, const AblationSpec& spec,
                            const AblationProgress& progress) {
  if (data.task != SyntheticTask::kEntityLookup)
    throw ConfigError("run-ablation needs entity_lookup data");
  if (spec.seeds.empty()) throw ConfigError("run-ablation needs at least one seed");
  AblationResult result;
  const auto variants = ablation_variants();
  std::vector<std::vector<double>> acc(variants.size());
  for (std::uint64_t seed : spec.seeds) {
    TransEConfig tc = spec.transe;
    tc.seed = seed;
    const Matrix kg_table = transe_train(data.kg, tc).embeddings.entities;
    const Matrix random_table = random_entity_table(data.kg.entity_count, tc.dim, seed);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      AblationRow row = run_variant(data, spec, variants[v], seed, kg_table, random_table);
      acc[v].push_back(row.team_token_acc);
      if (progress) progress(row);
      result.rows.push_back(std::move(row));
    }
  }
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const double n = static_cast<double>(acc[v].size());
    double mean = 0.0;
    for (double a : acc[v]) mean += a;
    mean /= n;
    double ss = 0.0;
    for (double a : acc[v]) ss += (a - mean) * (a - mean);
    result.aggregates.push_back(
        {variants[v].name, mean, acc[v].size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0});
  }
  return result;
}

const AblationAggregate& find_aggregate(const AblationResult& result,
                                        const std::string& config) {
  for (const auto& a : result.aggregates)
    if (a.config == config) return a;
  throw ConfigError("no ablation configuration named " + config);
}

void write_ablation_csv(const std::filesystem::path& path, const AblationResult& result) {
  auto out = io::open_output(path);
  out << "config,seed,heldout_loss,team_token_acc\n";
  for (const auto& r : result.rows)
    out << r.config << ',' << r.seed << ',' << io::format_double(r.heldout_loss) << ','
        << io::format_double(r.team_token_acc) << '\n';
  out << "config,mean,stdev\n";
  for (const auto& a : result.aggregates)
    out << a.config << ',' << io::format_double(a.mean) << ',' << io::format_double(a.stdev)
        << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace entsum
