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

// Exact-match gazetteer linking of case-preserved tokens to entity ids.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace entsum {

// Whitespace split, with leading and trailing . , ! ? ; : " ' ( ) peeled
// off into their own tokens. Case is left untouched.
std::vector<std::string> tokenize(std::string_view text);

std::string join_tokens(std::span<const std::string> tokens);

struct EntitySpan {
  int start = 0;  // inclusive token index
  int end = 0;    // exclusive
  int entity_id = 0;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

struct LinkedDocument {
  std::vector<std::string> tokens;
  std::vector<EntitySpan> spans;
};

class Gazetteer {
 public:
  Gazetteer() = default;

  // surface is tokenized; an empty or repeated surface form is a ConfigError.
  void add(std::string_view surface, int entity_id);

  // Longest-match lookup starting at tokens[pos]; returns matched length
  // (0 when nothing matches) and writes the id.
  int longest_match(std::span<const std::string> tokens, std::size_t pos,
                    int* entity_id) const;

  std::size_t size() const { return entries_.size(); }
  int max_surface_len() const { return max_len_; }
  int max_entity_id() const;
  const std::map<std::string, int>& entries() const { return entries_; }

  // surface<TAB>entity_id lines.
  static Gazetteer load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, int> entries_;  // keyed by single-space joined tokens
  int max_len_ = 0;
};

// Greedy left-to-right longest match; spans never overlap.
std::vector<EntitySpan> link(std::span<const std::string> tokens, const Gazetteer& gazetteer);

// Empty until at least min_tokens tokens exist, link() afterwards.
std::vector<EntitySpan> link_prefix(std::span<const std::string> tokens,
                                    const Gazetteer& gazetteer, int min_tokens = 20);

LinkedDocument link_document(std::string_view text, const Gazetteer& gazetteer);

}  // namespace entsum
