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

#ifndef ECOTRAJ__PROGRAM_HPP_
#define ECOTRAJ__PROGRAM_HPP_

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ecotraj/banded.hpp"

namespace ecotraj
{

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Triplet
{
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Convex QP  min 1/2 x'Px + q'x + constant  s.t.  lower <= A x <= upper.
/// Variables and rows carry a stage index (time step) so the solvers can order the
/// KKT system into a narrow band.
struct QpData
{
  int num_vars = 0;
  std::vector<Triplet> hessian;  // lower triangle, duplicates summed
  std::vector<double> gradient;
  double constant = 0.0;

  std::vector<Triplet> constraints;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::string> row_labels;

  std::vector<int> var_stage;
  std::vector<int> row_stage;
  /// (variable, equality row) pairs eliminated together as 2x2 pivots.
  std::vector<std::pair<int, int>> pivot_pairs;

  int num_rows() const { return static_cast<int>(lower.size()); }
  double objective(std::span<const double> x) const;
};

/// Smooth program  min f(x)  s.t.  c(x) = 0,  d_lo <= d(x) <= d_hi,  x_lo <= x <= x_hi.
class SmoothProgram
{
public:
  virtual ~SmoothProgram() = default;

  virtual int num_vars() const = 0;
  virtual int num_eq() const = 0;
  virtual int num_ineq() const = 0;

  virtual void variable_bounds(std::span<double> lo, std::span<double> hi) const = 0;
  virtual void ineq_bounds(std::span<double> lo, std::span<double> hi) const = 0;

  virtual double objective(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x, std::span<double> g) const = 0;
  virtual void eq_values(std::span<const double> x, std::span<double> c) const = 0;
  virtual void ineq_values(std::span<const double> x, std::span<double> d) const = 0;
  /// Jacobians and the Lagrangian Hessian return a fixed sparsity pattern on every call.
  virtual void eq_jacobian(std::span<const double> x, std::vector<Triplet> & out) const = 0;
  virtual void ineq_jacobian(std::span<const double> x, std::vector<Triplet> & out) const = 0;
  /// Lower triangle of  obj_factor * grad^2 f + sum y_eq grad^2 c + sum y_ineq grad^2 d.
  virtual void lagrangian_hessian(
    std::span<const double> x, double obj_factor, std::span<const double> y_eq,
    std::span<const double> y_ineq, std::vector<Triplet> & out) const = 0;

  virtual std::vector<int> var_stages() const = 0;
  virtual std::vector<int> eq_stages() const = 0;
  virtual std::vector<int> ineq_stages() const = 0;
  virtual std::vector<std::pair<int, int>> pivot_pairs() const { return {}; }
  virtual std::string eq_label(int /*row*/) const { return {}; }
  virtual std::string ineq_label(int /*row*/) const { return {}; }
};

/// Stage-major ordering of a KKT system [H J'; J D]. Rows are placed after the
/// variables of their stage; a paired row follows its variable directly.
struct KktLayout
{
  std::vector<int> var_pos;
  std::vector<int> row_pos;
  std::vector<std::uint8_t> pivots;
  int size = 0;
  int bandwidth = 0;

  static KktLayout build(
    std::span<const int> var_stage, std::span<const int> row_stage,
    std::span<const std::pair<int, int>> pairs);

  /// Widens the bandwidth to cover the given entries (row indices refer to KKT rows,
  /// i.e. `row_pos`; pass is_row_col=false for Hessian entries).
  void cover_hessian(std::span<const Triplet> entries);
  void cover_jacobian(std::span<const Triplet> entries, int row_offset = 0);
};

}  // namespace ecotraj

#endif  // ECOTRAJ__PROGRAM_HPP_
