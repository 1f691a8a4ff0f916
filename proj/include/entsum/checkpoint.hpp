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

// Binary checkpoint container:
//   "ENTSUMCK" | u32 version
//   u64 n + model config text (key=value lines)
//   u64 count, then per token: u64 n + bytes
//   u64 count, then per tensor: u64 n + name, u64 rows, u64 cols, doubles
// Integers and doubles are little-endian; the frozen entity table is stored
// as the tensor "entity_table".

#include <filesystem>
#include <memory>

#include "entsum/model.hpp"

namespace entsum {

void save_checkpoint(const std::filesystem::path& path, const Summarizer& model);
std::unique_ptr<Summarizer> load_checkpoint(const std::filesystem::path& path);

}  // namespace entsum
