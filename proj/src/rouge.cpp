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

#include "entsum/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <json.hpp>
#include <map>
#include <thread>

#include "entsum/errors.hpp"
#include "entsum/io.hpp"

namespace entsum {
namespace {

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts ngrams(std::span<const std::string> tokens, int n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<long>(i),
                                      tokens.begin() + static_cast<long>(i) + n)];
  return counts;
}

RougeScore from_counts(double overlap, double cand_total, double ref_total) {
  RougeScore s;
  if (cand_total > 0) s.precision = overlap / cand_total;
  if (ref_total > 0) s.recall = overlap / ref_total;
  if (s.precision + s.recall > 0)
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

}  // namespace

std::vector<std::string> rouge_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

RougeScore rouge_n(std::span<const std::string> candidate,
                   std::span<const std::string> reference, int n) {
  if (n < 1) throw ConfigError("rouge_n: n must be positive");
  const NgramCounts c = ngrams(candidate, n), r = ngrams(reference, n);
  double overlap = 0, ct = 0, rt = 0;
  for (const auto& [g, k] : c) {
    ct += k;
    if (auto it = r.find(g); it != r.end()) overlap += std::min(k, it->second);
  }
  for (const auto& [g, k] : r) rt += k;
  return from_counts(overlap, ct, rt);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l(std::span<const std::string> candidate,
                   std::span<const std::string> reference) {
  return from_counts(static_cast<double>(lcs_length(candidate, reference)),
                     static_cast<double>(candidate.size()),
                     static_cast<double>(reference.size()));
}

RougeRow rouge_f1(std::string_view candidate, std::string_view reference) {
  const auto c = rouge_tokens(candidate), r = rouge_tokens(reference);
  return {rouge_n(c, r, 1).f1, rouge_n(c, r, 2).f1, rouge_l(c, r).f1};
}

std::vector<CandidatePair> read_candidates(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::vector<CandidatePair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(io::location(path, lineno) + ": malformed JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("candidate") || !j.contains("reference") ||
        !j["candidate"].is_string() || !j["reference"].is_string())
      throw ConfigError(io::location(path, lineno) +
                        ": expected string fields \"candidate\" and \"reference\"");
    out.push_back({j["candidate"].get<std::string>(), j["reference"].get<std::string>()});
  }
  return out;
}

void write_candidates(const std::filesystem::path& path, std::span<const CandidatePair> pairs) {
  auto out = io::open_output(path);
  for (const auto& p : pairs)
    out << nlohmann::json{{"candidate", p.candidate}, {"reference", p.reference}}.dump()
        << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<RougeRow> score_pairs(std::span<const CandidatePair> pairs, int jobs) {
  std::vector<RougeRow> rows(pairs.size());
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1,
                              std::max<std::size_t>(pairs.size(), 1));
  auto work = [&](std::size_t w) {
    for (std::size_t i = w; i < pairs.size(); i += workers)
      rows[i] = rouge_f1(pairs[i].candidate, pairs[i].reference);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  return rows;
}

void write_rouge_csv(const std::filesystem::path& path, std::span<const RougeRow> rows) {
  auto out = io::open_output(path);
  out << "id,r1_f,r2_f,rl_f\n";
  RougeRow mean;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << i << ',' << io::format_double(rows[i].r1) << ',' << io::format_double(rows[i].r2)
        << ',' << io::format_double(rows[i].rl) << '\n';
    mean.r1 += rows[i].r1;
    mean.r2 += rows[i].r2;
    mean.rl += rows[i].rl;
  }
  if (!rows.empty()) {
    const double n = static_cast<double>(rows.size());
    mean = {mean.r1 / n, mean.r2 / n, mean.rl / n};
  }
  out << "mean," << io::format_double(mean.r1) << ',' << io::format_double(mean.r2) << ','
      << io::format_double(mean.rl) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace entsum
