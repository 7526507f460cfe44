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

#include "ecotraj/program.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>

namespace ecotraj
{

double QpData::objective(std::span<const double> x) const
{
  double value = constant;
  for (const auto & t : hessian) {
    const double term = t.value * x[t.row] * x[t.col];
    value += t.row == t.col ? 0.5 * term : term;
  }
  for (int i = 0; i < num_vars; ++i) {
    value += gradient[i] * x[i];
  }
  return value;
}

KktLayout KktLayout::build(
  std::span<const int> var_stage, std::span<const int> row_stage,
  std::span<const std::pair<int, int>> pairs)
{
  KktLayout layout;
  const int nv = static_cast<int>(var_stage.size());
  const int nr = static_cast<int>(row_stage.size());
  layout.var_pos.assign(nv, -1);
  layout.row_pos.assign(nr, -1);

  std::vector<int> partner_of_var(nv, -1);
  std::vector<char> row_paired(nr, 0);
  for (const auto & [var, row] : pairs) {
    partner_of_var[var] = row;
    row_paired[row] = 1;
  }

  int max_stage = 0;
  for (int s : var_stage) {
    max_stage = std::max(max_stage, s);
  }
  for (int s : row_stage) {
    max_stage = std::max(max_stage, s);
  }
  std::vector<std::vector<int>> vars_by_stage(max_stage + 1);
  std::vector<std::vector<int>> rows_by_stage(max_stage + 1);
  for (int i = 0; i < nv; ++i) {
    vars_by_stage[var_stage[i]].push_back(i);
  }
  for (int r = 0; r < nr; ++r) {
    if (!row_paired[r]) {
      rows_by_stage[row_stage[r]].push_back(r);
    }
  }

  layout.pivots.assign(nv + nr, 1);
  int pos = 0;
  for (int s = 0; s <= max_stage; ++s) {
    for (int var : vars_by_stage[s]) {
      layout.var_pos[var] = pos;
      if (partner_of_var[var] >= 0) {
        layout.pivots[pos] = 2;
        layout.pivots[pos + 1] = 0;
        layout.row_pos[partner_of_var[var]] = pos + 1;
        pos += 2;
      } else {
        ++pos;
      }
    }
    for (int row : rows_by_stage[s]) {
      layout.row_pos[row] = pos++;
    }
  }
  layout.size = pos;
  layout.bandwidth = 1;
  return layout;
}

void KktLayout::cover_hessian(std::span<const Triplet> entries)
{
  for (const auto & t : entries) {
    bandwidth = std::max(bandwidth, std::abs(var_pos[t.row] - var_pos[t.col]));
  }
}

void KktLayout::cover_jacobian(std::span<const Triplet> entries, int row_offset)
{
  for (const auto & t : entries) {
    bandwidth = std::max(bandwidth, std::abs(row_pos[t.row + row_offset] - var_pos[t.col]));
  }
}

}  // namespace ecotraj
