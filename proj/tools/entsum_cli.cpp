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

// entsum command-line driver.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <thread>

#include "entsum/ablation.hpp"
#include "entsum/checkpoint.hpp"
#include "entsum/decode.hpp"
#include "entsum/io.hpp"
#include "entsum/rouge.hpp"
#include "entsum/synthetic.hpp"
#include "entsum/train.hpp"
#include "entsum/transe.hpp"

namespace {

using namespace entsum;

struct ConfigFlags {
  std::string preset = "toy";
  std::string config;
  std::vector<std::string> set;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "Named preset (paper or toy)")
        ->check(CLI::IsMember({"paper", "toy"}));
    cmd->add_option("--config", config, "key=value config file applied over the preset");
    cmd->add_option("--set", set, "Extra key=value overrides, applied last");
    cmd->add_option("--seed", seed, "Random seed");
  }

  RunConfig resolve() const {
    RunConfig c = entsum::preset(preset);
    if (!config.empty()) apply_config_file(c, config);
    for (const auto& kv : set) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      apply_setting(c, io::trim(std::string_view(kv).substr(0, eq)),
                    std::string_view(kv).substr(eq + 1));
    }
    if (seed) c.train.seed = *seed;
    c.model.validate();
    c.train.validate();
    c.decode.validate();
    return c;
  }
};

int resolve_jobs(int jobs) {
  if (jobs < 0) throw ConfigError("--jobs must be >= 0");
  if (jobs == 0) return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return jobs;
}

// ---- gen-synthetic ----

struct GenArgs {
  std::string task = "entity_lookup";
  SyntheticTaskSpec spec;
  std::string out;
};

void gen_synthetic_cmd(const GenArgs& a) {
  SyntheticTaskSpec spec = a.spec;
  spec.task = parse_synthetic_task(a.task);
  const SyntheticData data = gen_synthetic(spec);
  write_synthetic(a.out, data);
  std::cout << "wrote " << data.train.size() << " train and " << data.heldout.size()
            << " held-out pairs, " << data.kg.triples.size() << " triples to " << a.out << "\n";
}

// ---- train-kg ----

struct KgArgs {
  std::string triples;
  std::string entities;
  TransEConfig cfg;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string loss_out;
};

void train_kg_cmd(const KgArgs& a) {
  KnowledgeGraph kg = load_knowledge_graph(a.triples, a.entities);
  TransEConfig cfg = a.cfg;
  if (a.seed) cfg.seed = *a.seed;
  const TransETrainResult r = transe_train(kg, cfg);
  write_embeddings(a.out, r.embeddings.entities);
  if (!a.loss_out.empty()) {
    auto out = io::open_output(a.loss_out);
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < r.epoch_loss.size(); ++i)
      out << (i + 1) << ',' << io::format_double(r.epoch_loss[i]) << '\n';
  }
  const auto lp = link_prediction_eval(kg, r.embeddings, 1);
  std::cout << "epochs " << cfg.epochs << ", final loss "
            << (r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back()) << ", train hits@1 "
            << lp.hits_at_k << "\n";
}

// ---- train-sum ----

struct SumArgs {
  ConfigFlags flags;
  std::string train;
  std::string gazetteer;
  std::string embeddings;
  int entity_count = 0;
  std::string out;
  std::string loss_trace;
};

Matrix entity_table_for(const RunConfig& c, const SumArgs& a, const Gazetteer* gaz) {
  switch (c.model.entity_mode) {
    case EntityMode::kOff:
      return Matrix();
    case EntityMode::kKg:
      if (a.embeddings.empty()) throw ConfigError("entity_mode=kg needs --embeddings");
      return read_embeddings(a.embeddings);
    case EntityMode::kRandom: {
      int count = a.entity_count;
      if (count == 0 && gaz) count = gaz->max_entity_id() + 1;
      if (count <= 0) throw ConfigError("entity_mode=random needs --gazetteer or --entity-count");
      return random_entity_table(count, c.model.d_ent, c.train.seed);
    }
  }
  return Matrix();
}

void train_sum_cmd(const SumArgs& a) {
  RunConfig c = a.flags.resolve();
  const auto corpus = read_corpus(a.train);
  if (corpus.empty()) throw ConfigError(a.train + ": empty training corpus");
  std::optional<Gazetteer> gaz;
  if (!a.gazetteer.empty()) gaz = Gazetteer::load(a.gazetteer);
  if (c.model.entity_mode != EntityMode::kOff && !gaz)
    throw ConfigError("entity_mode=" + to_string(c.model.entity_mode) + " needs --gazetteer");
  Matrix table = entity_table_for(c, a, gaz ? &*gaz : nullptr);
  if (table.size() > 0) c.model.d_ent = static_cast<int>(table.cols());
  if (gaz && table.rows() > 0 && gaz->max_entity_id() >= table.rows())
    throw ConfigError("gazetteer id " + std::to_string(gaz->max_entity_id()) +
                      " is outside the entity table (" + std::to_string(table.rows()) +
                      " rows)");
  Summarizer model(c.model, build_vocabulary(corpus), std::move(table), c.train.seed);
  const auto examples = prepare_examples(model, corpus, gaz ? &*gaz : nullptr, c.train.max_src,
                                         c.train.max_tgt_train, c.decode.entity_min_tokens);
  const auto losses = train_summarizer(model, examples, c.train);
  save_checkpoint(a.out, model);
  if (!a.loss_trace.empty()) write_loss_trace(a.loss_trace, losses);
  std::cout << "trained " << losses.size() << " steps, " << model.parameter_count()
            << " parameters";
  if (!losses.empty()) std::cout << ", last loss " << losses.back();
  std::cout << "\n";
}

// ---- summarize ----

struct SummarizeArgs {
  ConfigFlags flags;
  std::string checkpoint;
  std::string input;
  std::string gazetteer;
  std::string out;
  int jobs = 1;
};

void summarize_cmd(const SummarizeArgs& a) {
  const RunConfig c = a.flags.resolve();
  const int jobs = resolve_jobs(a.jobs);
  const auto model = load_checkpoint(a.checkpoint);
  const auto corpus = read_corpus(a.input);
  std::optional<Gazetteer> gaz;
  if (!a.gazetteer.empty()) gaz = Gazetteer::load(a.gazetteer);
  if (model->uses_entities() && !gaz)
    throw ConfigError("checkpoint uses entities; pass --gazetteer");
  const Gazetteer* g = gaz ? &*gaz : nullptr;

  std::vector<CandidatePair> pairs(corpus.size());
  std::vector<std::exception_ptr> errors(corpus.size());
  auto work = [&](std::size_t w, std::size_t stride) {
    for (std::size_t i = w; i < corpus.size(); i += stride) {
      try {
        LinkedDocument doc = g ? link_document(corpus[i].article, *g)
                               : LinkedDocument{tokenize(corpus[i].article), {}};
        pairs[i] = {join_tokens(summarize_article(*model, doc, g, c.decode, c.train.max_src)),
                    corpus[i].summary};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs),
                                                    std::max<std::size_t>(corpus.size(), 1));
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const ConfigError& e) {
      throw ConfigError(a.input + ": entry " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  write_candidates(a.out, pairs);
  std::cout << "summarized " << pairs.size() << " documents\n";
}

// ---- eval-rouge ----

struct RougeArgs {
  std::string input;
  std::string out;
  int jobs = 1;
};

void eval_rouge_cmd(const RougeArgs& a) {
  const auto pairs = read_candidates(a.input);
  const auto rows = score_pairs(pairs, resolve_jobs(a.jobs));
  write_rouge_csv(a.out, rows);
  RougeRow mean;
  for (const auto& r : rows) {
    mean.r1 += r.r1;
    mean.r2 += r.r2;
    mean.rl += r.rl;
  }
  const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
  std::printf("R-1 %.4f  R-2 %.4f  R-L %.4f  (%zu pairs)\n", mean.r1 / n, mean.r2 / n,
              mean.rl / n, rows.size());
}

// ---- run-ablation ----

struct AblationArgs {
  ConfigFlags flags;
  std::string data;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  TransEConfig transe;
  std::string out;
};

void run_ablation_cmd(const AblationArgs& a) {
  AblationSpec spec;
  spec.base = a.flags.resolve();
  spec.seeds = a.seeds;
  spec.transe = a.transe;
  if (a.flags.seed) spec.seeds = {*a.flags.seed};
  const SyntheticData data = read_synthetic(a.data);
  const AblationResult r = run_ablation(data, spec, [](const AblationRow& row) {
    std::printf("%-15s seed %-4llu heldout_loss %.4f team_acc %.3f\n", row.config.c_str(),
                static_cast<unsigned long long>(row.seed), row.heldout_loss,
                row.team_token_acc);
    std::fflush(stdout);
  });
  write_ablation_csv(a.out, r);
  for (const auto& g : r.aggregates)
    std::printf("%-15s team_acc mean %.3f stdev %.3f\n", g.config.c_str(), g.mean, g.stdev);
}

void add_transe_options(CLI::App* cmd, TransEConfig& cfg) {
  cmd->add_option("--dim", cfg.dim, "Embedding dimension");
  cmd->add_option("--gamma", cfg.gamma, "Margin");
  cmd->add_option("--kg-lr", cfg.lr, "SGD learning rate");
  cmd->add_option("--epochs", cfg.epochs, "Training epochs");
  cmd->add_option("--kg-batch-size", cfg.batch_size, "Triples per SGD step");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity-aware Transformer-XL summarizer"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Generate a synthetic corpus and KG");
  gen_cmd->add_option("--task", gen.task, "copy or entity_lookup");
  gen_cmd->add_option("--n-entities", gen.spec.n_entities, "Entity count (0 derives it)");
  gen_cmd->add_option("--n-relations", gen.spec.n_relations, "1 or 2");
  gen_cmd->add_option("--n-train", gen.spec.n_train, "Training pairs");
  gen_cmd->add_option("--n-heldout", gen.spec.n_heldout, "Held-out pairs");
  gen_cmd->add_option("--vocab-size", gen.spec.vocab_size, "Copy-task vocabulary");
  gen_cmd->add_option("--n-teams", gen.spec.n_teams, "Teams in the lookup task");
  gen_cmd->add_option("--seed", gen.spec.seed, "Random seed");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  KgArgs kg;
  auto* kg_cmd = app.add_subcommand("train-kg", "Train TransE entity embeddings");
  kg_cmd->add_option("--triples", kg.triples, "head<TAB>rel<TAB>tail file")->required();
  kg_cmd->add_option("--entities", kg.entities, "id<TAB>name file");
  add_transe_options(kg_cmd, kg.cfg);
  kg_cmd->add_option("--seed", kg.seed, "Random seed");
  kg_cmd->add_option("--out", kg.out, "Embedding output file")->required();
  kg_cmd->add_option("--loss-out", kg.loss_out, "Per-epoch loss CSV");

  SumArgs sum;
  auto* sum_cmd = app.add_subcommand("train-sum", "Train the summarizer");
  sum.flags.add_to(sum_cmd);
  sum_cmd->add_option("--train", sum.train, "Training corpus (JSON lines)")->required();
  sum_cmd->add_option("--gazetteer", sum.gazetteer, "surface<TAB>id file");
  sum_cmd->add_option("--embeddings", sum.embeddings, "TransE embeddings (entity_mode=kg)");
  sum_cmd->add_option("--entity-count", sum.entity_count, "Rows of the random entity table");
  sum_cmd->add_option("--out", sum.out, "Checkpoint output")->required();
  sum_cmd->add_option("--loss-trace", sum.loss_trace, "Per-step loss CSV");

  SummarizeArgs summ;
  auto* summ_cmd = app.add_subcommand("summarize", "Beam-search summaries for a corpus");
  summ.flags.add_to(summ_cmd);
  summ_cmd->add_option("--checkpoint", summ.checkpoint, "Model checkpoint")->required();
  summ_cmd->add_option("--input", summ.input, "Corpus (JSON lines)")->required();
  summ_cmd->add_option("--gazetteer", summ.gazetteer, "surface<TAB>id file");
  summ_cmd->add_option("--out", summ.out, "candidate/reference JSON lines")->required();
  summ_cmd->add_option("--jobs", summ.jobs, "Worker threads (0 = all cores)");

  RougeArgs rouge;
  auto* rouge_cmd = app.add_subcommand("eval-rouge", "Score candidates with ROUGE-1/2/L F1");
  rouge_cmd->add_option("--input", rouge.input, "candidate/reference JSON lines")->required();
  rouge_cmd->add_option("--out", rouge.out, "Per-document CSV")->required();
  rouge_cmd->add_option("--jobs", rouge.jobs, "Worker threads (0 = all cores)");

  AblationArgs abl;
  auto* abl_cmd = app.add_subcommand("run-ablation", "Backbone x entity-mode grid");
  abl.flags.add_to(abl_cmd);
  abl_cmd->add_option("--data", abl.data, "gen-synthetic output directory")->required();
  abl_cmd->add_option("--seeds", abl.seeds, "Seeds (--seed runs a single seed)")->delimiter(',');
  add_transe_options(abl_cmd, abl.transe);
  abl_cmd->add_option("--out", abl.out, "Results CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen_cmd->parsed()) gen_synthetic_cmd(gen);
    else if (kg_cmd->parsed()) train_kg_cmd(kg);
    else if (sum_cmd->parsed()) train_sum_cmd(sum);
    else if (summ_cmd->parsed()) summarize_cmd(summ);
    else if (rouge_cmd->parsed()) eval_rouge_cmd(rouge);
    else if (abl_cmd->parsed()) run_ablation_cmd(abl);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
