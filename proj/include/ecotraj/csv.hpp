// Copyright 2026 The ecotraj Authors
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

#ifndef ECOTRAJ__CSV_HPP_
#define ECOTRAJ__CSV_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ecotraj::csv
{

struct Table
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a comma-separated file; blank lines and lines starting with '#' are skipped.
Table read(const std::filesystem::path & path);

std::vector<std::string> split(std::string_view line);

/// Throws Error(kParse) with `context` when `text` is not a complete number.
double to_double(std::string_view text, std::string_view context);

/// Shortest representation that round-trips, so repeated runs print identical bytes.
std::string format(double value);

}  // namespace ecotraj::csv

#endif  // ECOTRAJ__CSV_HPP_
