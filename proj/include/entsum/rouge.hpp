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

// ROUGE-1/2/L F1 over whitespace tokens. Both sides are lowercased before
// matching; n-gram overlap uses clipped counts.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace entsum {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

std::vector<std::string> rouge_tokens(std::string_view text);

RougeScore rouge_n(std::span<const std::string> candidate,
                   std::span<const std::string> reference, int n);
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);
RougeScore rouge_l(std::span<const std::string> candidate,
                   std::span<const std::string> reference);

struct RougeRow {
  double r1 = 0.0;
  double r2 = 0.0;
  double rl = 0.0;
};

RougeRow rouge_f1(std::string_view candidate, std::string_view reference);

struct CandidatePair {
  std::string candidate;
  std::string reference;
};

// JSONL with string fields "candidate" and "reference".
std::vector<CandidatePair> read_candidates(const std::filesystem::path& path);
void write_candidates(const std::filesystem::path& path, std::span<const CandidatePair> pairs);

// Scores every pair using up to `jobs` threads; order follows the input.
std::vector<RougeRow> score_pairs(std::span<const CandidatePair> pairs, int jobs);

// CSV "id,r1_f,r2_f,rl_f", one row per pair (ids from 0) and a final "mean".
void write_rouge_csv(const std::filesystem::path& path, std::span<const RougeRow> rows);

}  // namespace entsum
