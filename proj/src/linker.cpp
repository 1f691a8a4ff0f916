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

#include "entsum/linker.hpp"

#include <algorithm>
#include <cctype>

#include "entsum/errors.hpp"
#include "entsum/io.hpp"

namespace entsum {
namespace {

bool is_edge_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '"': case '\'': case '(': case ')':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j == i) break;
    std::string_view word = text.substr(i, j - i);
    i = j;

    std::size_t b = 0, e = word.size();
    while (b < e && is_edge_punct(word[b])) ++b;
    while (e > b && is_edge_punct(word[e - 1])) --e;
    for (std::size_t k = 0; k < b; ++k) out.emplace_back(1, word[k]);
    if (e > b) out.emplace_back(word.substr(b, e - b));
    for (std::size_t k = e; k < word.size(); ++k) out.emplace_back(1, word[k]);
  }
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

void Gazetteer::add(std::string_view surface, int entity_id) {
  const auto tokens = tokenize(surface);
  if (tokens.empty()) throw ConfigError("gazetteer: empty surface form");
  if (entity_id < 0) throw ConfigError("gazetteer: negative entity id");
  const std::string key = join_tokens(tokens);
  if (!entries_.emplace(key, entity_id).second)
    throw ConfigError("gazetteer: duplicate surface form '" + key + "'");
  max_len_ = std::max(max_len_, static_cast<int>(tokens.size()));
}

int Gazetteer::longest_match(std::span<const std::string> tokens, std::size_t pos,
                             int* entity_id) const {
  const std::size_t limit = std::min(tokens.size() - pos, static_cast<std::size_t>(max_len_));
  std::string key;
  int best = 0;
  for (std::size_t len = 1; len <= limit; ++len) {
    if (len > 1) key += ' ';
    key += tokens[pos + len - 1];
    auto it = entries_.find(key);
    if (it != entries_.end()) {
      best = static_cast<int>(len);
      if (entity_id) *entity_id = it->second;
    }
  }
  return best;
}

int Gazetteer::max_entity_id() const {
  int m = -1;
  for (const auto& [surface, id] : entries_) m = std::max(m, id);
  return m;
}

Gazetteer Gazetteer::load(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  Gazetteer g;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (io::trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.rfind('\t');
    const std::string where = io::location(path, line_no);
    if (tab == std::string::npos) throw ConfigError(where + ": expected surface<TAB>id");
    try {
      g.add(line.substr(0, tab),
            static_cast<int>(io::parse_int(line.substr(tab + 1), where)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return g;
}

void Gazetteer::save(const std::filesystem::path& path) const {
  auto out = io::open_output(path);
  for (const auto& [surface, id] : entries_) out << surface << '\t' << id << '\n';
}

std::vector<EntitySpan> link(std::span<const std::string> tokens, const Gazetteer& gazetteer) {
  std::vector<EntitySpan> spans;
  std::size_t pos = 0;
  while (pos < tokens.size()) {
    int id = -1;
    const int len = gazetteer.longest_match(tokens, pos, &id);
    if (len > 0) {
      spans.push_back({static_cast<int>(pos), static_cast<int>(pos) + len, id});
      pos += static_cast<std::size_t>(len);
    } else {
      ++pos;
    }
  }
  return spans;
}

std::vector<EntitySpan> link_prefix(std::span<const std::string> tokens,
                                    const Gazetteer& gazetteer, int min_tokens) {
  if (static_cast<long>(tokens.size()) < min_tokens) return {};
  return link(tokens, gazetteer);
}

LinkedDocument link_document(std::string_view text, const Gazetteer& gazetteer) {
  LinkedDocument doc;
  doc.tokens = tokenize(text);
  doc.spans = link(doc.tokens, gazetteer);
  return doc;
}

}  // namespace entsum
