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

#include "entsum/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <map>

#include "entsum/io.hpp"

namespace entsum {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

constexpr char kMagic[8] = {'E', 'N', 'T', 'S', 'U', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  put_string(out, name);
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  void bytes(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (!in_) throw ConfigError(path_ + ": truncated checkpoint");
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, sizeof(v));
    return v;
  }
  std::string string() {
    const auto n = u64();
    if (n > (1u << 30)) throw ConfigError(path_ + ": corrupt string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  Matrix matrix(std::string* name) {
    *name = string();
    const auto rows = u64(), cols = u64();
    if (rows > (1u << 24) || cols > (1u << 24))
      throw ConfigError(path_ + ": corrupt shape for " + *name);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    bytes(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    return m;
  }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Summarizer& model) {
  auto out = io::open_output(path, /*binary=*/true);
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  put_string(out, model_config_to_text(model.config()));
  const auto& tokens = model.vocab().tokens();
  put_u64(out, tokens.size());
  for (const auto& t : tokens) put_string(out, t);
  put_u64(out, model.parameters().size() + 1);
  put_matrix(out, "entity_table", model.entity_table().value());
  for (const auto& p : model.parameters()) put_matrix(out, p.name, p.tensor.value());
  if (!out) throw IoError("failed writing " + path.string());
}

std::unique_ptr<Summarizer> load_checkpoint(const std::filesystem::path& path) {
  auto in = io::open_input(path, /*binary=*/true);
  Reader r(in, path.string());
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ConfigError(path.string() + ": not an entsum checkpoint");
  std::uint32_t version;
  r.bytes(&version, sizeof(version));
  if (version != kVersion)
    throw ConfigError(path.string() + ": unsupported checkpoint version " +
                      std::to_string(version));
  ModelConfig config = model_config_from_text(r.string());
  std::vector<std::string> tokens(r.u64());
  for (auto& t : tokens) t = r.string();

  std::map<std::string, Matrix> tensors;
  const auto count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name;
    Matrix m = r.matrix(&name);
    if (!tensors.emplace(name, std::move(m)).second)
      throw ConfigError(path.string() + ": repeated tensor " + name);
  }
  auto table = tensors.find("entity_table");
  if (table == tensors.end()) throw ConfigError(path.string() + ": missing entity_table");
  auto model = std::make_unique<Summarizer>(config, Vocabulary(std::move(tokens)),
                                            std::move(table->second), 0);
  tensors.erase(table);
  for (const auto& p : model->parameters()) {
    auto it = tensors.find(p.name);
    if (it == tensors.end()) throw ConfigError(path.string() + ": missing tensor " + p.name);
    Tensor t = p.tensor;
    if (it->second.rows() != t.rows() || it->second.cols() != t.cols())
      throw ConfigError(path.string() + ": tensor " + p.name + " has shape " +
                        shape_string(it->second.rows(), it->second.cols()) + ", expected " +
                        shape_string(t));
    t.mutable_value() = std::move(it->second);
    tensors.erase(it);
  }
  if (!tensors.empty())
    throw ConfigError(path.string() + ": unexpected tensor " + tensors.begin()->first);
  return model;
}

}  // namespace entsum
