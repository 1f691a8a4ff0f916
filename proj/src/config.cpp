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

#include "entsum/config.hpp"

#include <sstream>

#include "entsum/errors.hpp"
#include "entsum/io.hpp"

namespace entsum {
namespace {

int as_int(std::string_view v, std::string_view key) {
  return static_cast<int>(io::parse_int(v, std::string(key)));
}

double as_double(std::string_view v, std::string_view key) {
  return io::parse_double(v, std::string(key));
}

bool apply_model(ModelConfig& m, std::string_view key, std::string_view v) {
  if (key == "n_layers") m.n_layers = as_int(v, key);
  else if (key == "n_heads") m.n_heads = as_int(v, key);
  else if (key == "d_model") m.d_model = as_int(v, key);
  else if (key == "d_ent") m.d_ent = as_int(v, key);
  else if (key == "dropout") m.dropout = as_double(v, key);
  else if (key == "vocab_size") m.vocab_size = as_int(v, key);
  else if (key == "entity_count") m.entity_count = as_int(v, key);
  else if (key == "L_max") m.L_max = as_int(v, key);
  else if (key == "segment_len") m.segment_len = as_int(v, key);
  else if (key == "memory_len") m.memory_len = as_int(v, key);
  else if (key == "backbone") m.backbone = parse_backbone(v);
  else if (key == "entity_mode") m.entity_mode = parse_entity_mode(v);
  else if (key == "conversion_layers") m.conversion_layers = as_int(v, key);
  else if (key == "d_ff") m.d_ff = as_int(v, key);
  else if (key == "ln_eps") m.ln_eps = as_double(v, key);
  else return false;
  return true;
}

}  // namespace

std::string to_string(Backbone b) { return b == Backbone::kXl ? "xl" : "vanilla"; }

std::string to_string(EntityMode m) {
  switch (m) {
    case EntityMode::kOff: return "off";
    case EntityMode::kRandom: return "random";
    case EntityMode::kKg: return "kg";
  }
  return "off";
}

Backbone parse_backbone(std::string_view s) {
  if (s == "xl") return Backbone::kXl;
  if (s == "vanilla") return Backbone::kVanilla;
  throw ConfigError("backbone must be vanilla or xl, got '" + std::string(s) + "'");
}

EntityMode parse_entity_mode(std::string_view s) {
  if (s == "off") return EntityMode::kOff;
  if (s == "random") return EntityMode::kRandom;
  if (s == "kg") return EntityMode::kKg;
  throw ConfigError("entity_mode must be off, random or kg, got '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (n_layers < 1) fail("n_layers must be >= 1");
  if (n_heads < 1 || d_model < 1 || d_model % n_heads != 0)
    fail("n_heads must divide d_model");
  if (d_ent < 1) fail("d_ent must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) fail("dropout must be in [0, 1)");
  if (L_max < 1) fail("L_max must be >= 1");
  if (segment_len < 1) fail("segment_len must be >= 1");
  if (memory_len < 0) fail("memory_len must be >= 0");
  if (backbone == Backbone::kXl && L_max < segment_len + memory_len)
    fail("L_max must be at least segment_len + memory_len");
  if (conversion_layers < 1) fail("conversion_layers must be >= 1");
  if (d_ff < 1) fail("d_ff must be >= 1");
  if (ln_eps < 0.0) fail("ln_eps must be >= 0");
  if (entity_count < 0) fail("entity_count must be >= 0");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train config: lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw ConfigError("train config: betas must be in [0, 1)");
  if (eps <= 0.0) throw ConfigError("train config: eps must be positive");
  if (steps < 0 || batch_size < 1)
    throw ConfigError("train config: steps >= 0 and batch_size >= 1 required");
  if (max_src < 1 || max_tgt_train < 1 || max_tgt_test < 1)
    throw ConfigError("train config: truncation lengths must be positive");
}

void DecodeConfig::validate() const {
  if (beam_width < 1) throw ConfigError("decode config: beam_width must be >= 1");
  if (min_len < 0 || min_len > max_len)
    throw ConfigError("decode config: need 0 <= min_len <= max_len");
  if (entity_min_tokens < 0) throw ConfigError("decode config: entity_min_tokens must be >= 0");
  if (length_penalty < 0.0) throw ConfigError("decode config: length_penalty must be >= 0");
}

RunConfig preset(std::string_view name) {
  RunConfig c;
  if (name == "toy") return c;
  if (name == "paper") {
    c.model.n_layers = 2;
    c.model.n_heads = 4;
    c.model.d_model = 300;
    c.model.d_ent = 300;
    c.model.dropout = 0.3;
    c.model.L_max = 512;
    c.model.segment_len = 100;
    c.model.memory_len = 100;
    c.model.d_ff = 1200;
    c.model.backbone = Backbone::kXl;
    c.model.entity_mode = EntityMode::kKg;
    c.train.lr = 0.00005;
    c.train.batch_size = 1;
    c.train.max_src = 400;
    c.train.max_tgt_train = 100;
    c.train.max_tgt_test = 120;
    c.decode.beam_width = 5;
    c.decode.min_len = 60;
    c.decode.max_len = 90;
    c.decode.entity_min_tokens = 20;
    return c;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected paper or toy)");
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view v) {
  v = io::trim(v);
  if (apply_model(c.model, key, v)) return;
  TrainConfig& t = c.train;
  DecodeConfig& d = c.decode;
  if (key == "lr") t.lr = as_double(v, key);
  else if (key == "beta1") t.beta1 = as_double(v, key);
  else if (key == "beta2") t.beta2 = as_double(v, key);
  else if (key == "eps") t.eps = as_double(v, key);
  else if (key == "weight_decay") t.weight_decay = as_double(v, key);
  else if (key == "steps") t.steps = as_int(v, key);
  else if (key == "batch_size") t.batch_size = as_int(v, key);
  else if (key == "seed") t.seed = static_cast<std::uint64_t>(io::parse_int(v, "seed"));
  else if (key == "max_src") t.max_src = as_int(v, key);
  else if (key == "max_tgt_train") t.max_tgt_train = as_int(v, key);
  else if (key == "max_tgt_test") t.max_tgt_test = as_int(v, key);
  else if (key == "beam_width") d.beam_width = as_int(v, key);
  else if (key == "min_len") d.min_len = as_int(v, key);
  else if (key == "max_len") d.max_len = as_int(v, key);
  else if (key == "entity_min_tokens") d.entity_min_tokens = as_int(v, key);
  else if (key == "length_penalty") d.length_penalty = as_double(v, key);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const auto text = io::trim(std::string_view(line).substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(io::location(path, line_no) + ": expected key = value");
    try {
      apply_setting(config, io::trim(text.substr(0, eq)), text.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(io::location(path, line_no) + ": " + e.what());
    }
  }
}

std::string model_config_to_text(const ModelConfig& m) {
  std::ostringstream os;
  os << "n_layers=" << m.n_layers << '\n'
     << "n_heads=" << m.n_heads << '\n'
     << "d_model=" << m.d_model << '\n'
     << "d_ent=" << m.d_ent << '\n'
     << "dropout=" << io::format_double(m.dropout) << '\n'
     << "vocab_size=" << m.vocab_size << '\n'
     << "entity_count=" << m.entity_count << '\n'
     << "L_max=" << m.L_max << '\n'
     << "segment_len=" << m.segment_len << '\n'
     << "memory_len=" << m.memory_len << '\n'
     << "backbone=" << to_string(m.backbone) << '\n'
     << "entity_mode=" << to_string(m.entity_mode) << '\n'
     << "conversion_layers=" << m.conversion_layers << '\n'
     << "d_ff=" << m.d_ff << '\n'
     << "ln_eps=" << io::format_double(m.ln_eps) << '\n';
  return os.str();
}

ModelConfig model_config_from_text(std::string_view text) {
  ModelConfig m;
  for (const auto& line : io::split(text, '\n')) {
    const auto t = io::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos || !apply_model(m, t.substr(0, eq), t.substr(eq + 1)))
      throw ConfigError("model config: bad line '" + std::string(t) + "'");
  }
  return m;
}

}  // namespace entsum
