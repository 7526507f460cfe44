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

#ifndef ECOTRAJ__QP_SOLVER_HPP_
#define ECOTRAJ__QP_SOLVER_HPP_

#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecotraj/program.hpp"

namespace ecotraj
{

enum class SolveStatus {
  kOptimal,
  kMaxIterations,
  kInfeasible,
  kNumericalFailure,
  kTimeLimit,
};

std::string_view to_string(SolveStatus status);

/// Operator-splitting (ADMM) settings.
struct QpSettings
{
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  double eps_infeasible = 1e-7;
  int max_iter = 20000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  bool adaptive_rho = true;
  int adaptive_rho_interval = 25;
  bool polish = true;
  int polish_refine_iter = 5;
  double polish_delta = 1e-9;
  int scaling_iter = 10;
  double time_limit_ms = 0.0;  // 0 disables the limit
  bool trace = false;
};

struct QpWarmStart
{
  std::vector<double> x;
  std::vector<double> y;  // may be empty
};

struct QpResult
{
  SolveStatus status = SolveStatus::kNumericalFailure;
  std::vector<double> x;
  std::vector<double> y;  // row multipliers: negative at an active lower bound
  std::vector<double> z;  // A x projected onto [lower, upper]
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool polished = false;
  int polish_attempts = 0;
  int refactorizations = 0;
  /// On infeasibility: the row carrying the largest certificate weight, and the
  /// certificate itself (A' y ~ 0 with u' y+ + l' y- < 0).
  int infeasible_row = -1;
  std::vector<double> certificate;
  nlohmann::json trace;
};

/// Solves a convex QP with ADMM on the reduced (variables only) banded system, Ruiz
/// equilibration, adaptive step size, and active-set polishing.
QpResult solve_qp_admm(
  const QpData & qp, const QpSettings & settings, const QpWarmStart * warm = nullptr);

/// Max-norm primal and dual residuals of (x, y) for the original data, with
/// z = clip(A x, lower, upper).
struct QpResiduals
{
  double primal = 0.0;
  double dual = 0.0;
};
QpResiduals qp_residuals(const QpData & qp, const std::vector<double> & x, const std::vector<double> & y);

}  // namespace ecotraj

#endif  // ECOTRAJ__QP_SOLVER_HPP_
