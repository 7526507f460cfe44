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

#include "ecotraj/csv.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>

#include "ecotraj/error.hpp"

namespace ecotraj
{

const char * to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid argument";
    case ErrorCode::kOutOfBounds:
      return "out of bounds";
    case ErrorCode::kRankDeficient:
      return "rank deficient";
    case ErrorCode::kNoFeasibleSamples:
      return "no feasible samples";
    case ErrorCode::kParse:
      return "parse error";
    case ErrorCode::kIo:
      return "i/o error";
    case ErrorCode::kUndefinedMetric:
      return "undefined metric";
  }
  return "unknown";
}

namespace csv
{

namespace
{
std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}
}  // namespace

std::vector<std::string> split(std::string_view line)
{
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return cells;
}

Table read(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  Table table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') {
      continue;
    }
    if (!have_header) {
      table.header = split(body);
      have_header = true;
    } else {
      table.rows.push_back(split(body));
    }
  }
  if (!have_header) {
    throw Error(ErrorCode::kParse, path.string() + ": empty file");
  }
  return table;
}

double to_double(std::string_view text, std::string_view context)
{
  double value = 0.0;
  const char * first = text.data();
  const char * last = text.data() + text.size();
  if (!text.empty() && *first == '+') {
    ++first;
  }
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw Error(
      ErrorCode::kParse, fmt::format("{}: '{}' is not a number", context, text));
  }
  return value;
}

std::string format(double value) { return fmt::format("{}", value); }

}  // namespace csv
}  // namespace ecotraj
