// Copyright 2026 The peakrate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace peakrate::csv {

std::vector<std::string_view> split(std::string_view line, char sep = ',');

std::optional<double> parse_double(std::string_view field);
std::optional<std::uint64_t> parse_uint(std::string_view field);

// Round-trip rendering (17 significant digits).
std::string format_double(double v);

// Strips a trailing '\r' so files written on other platforms parse.
std::string_view chomp(std::string_view line);

}  // namespace peakrate::csv
