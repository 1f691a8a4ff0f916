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

// Small file and text helpers shared by the loaders.

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace entsum::io {

// Throw IoError when the file cannot be opened.
std::ifstream open_input(const std::filesystem::path& path, bool binary = false);
std::ofstream open_output(const std::filesystem::path& path, bool binary = false);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

// %.17g, enough to round-trip any double.
std::string format_double(double value);

// Strict parses; throw ConfigError naming `what`.
long long parse_int(std::string_view text, const std::string& what);
double parse_double(std::string_view text, const std::string& what);

std::string location(const std::filesystem::path& path, std::size_t line);

}  // namespace entsum::io
