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

// Central finite differences for derivative checks.

#ifndef ECOTRAJ_TESTS__ORACLE__FINITE_DIFF_HPP_
#define ECOTRAJ_TESTS__ORACLE__FINITE_DIFF_HPP_

#include <algorithm>
#include <cmath>

namespace oracle
{

template <class F>
double central_diff(F f, double x, double h)
{
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Mixed second derivative d2f/dxdy.
template <class F>
double central_mixed(F f, double x, double y, double h)
{
  return (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
}

/// Relative error with an absolute floor so values near zero compare sensibly.
inline double rel_error(double got, double want, double floor = 1.0)
{
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

}  // namespace oracle

#endif  // ECOTRAJ_TESTS__ORACLE__FINITE_DIFF_HPP_
