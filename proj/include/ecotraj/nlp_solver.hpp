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

#ifndef ECOTRAJ__NLP_SOLVER_HPP_
#define ECOTRAJ__NLP_SOLVER_HPP_

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecotraj/program.hpp"
#include "ecotraj/qp_solver.hpp"

namespace ecotraj
{

/// Primal-dual interior-point settings.
struct IpmSettings
{
  double tol = 1e-8;
  int max_iter = 200;
  double mu_init = 0.1;
  double bound_push = 1e-2;
  double bound_frac = 1e-2;
  double kappa_sigma = 1e10;
  double max_gradient = 100.0;  // objective is scaled so the initial gradient norm is at most this
  double time_limit_ms = 0.0;  // 0 disables the limit
  bool trace = false;
};

struct IpmResult
{
  SolveStatus status = SolveStatus::kNumericalFailure;
  std::vector<double> x;
  std::vector<double> y_eq;
  std::vector<double> y_ineq;
  std::vector<double> z;  // bound multipliers, z_lower - z_upper
  double objective = 0.0;
  int iterations = 0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double complementarity = 0.0;
  double mu = 0.0;
  int inertia_corrections = 0;
  int line_search_failures = 0;
  nlohmann::json trace;
};

/// Solves a smooth program with a barrier method: slack variables for the inequality
/// rows, a stage-ordered banded KKT factorization with inertia correction, fraction to
/// the boundary, and an l1-merit Armijo line search.
IpmResult solve_ipm(
  const SmoothProgram & program, std::span<const double> x0, const IpmSettings & settings);

/// First-order optimality residuals of a candidate point (unscaled), for verification.
struct KktResiduals
{
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;  // max |bound distance * multiplier|
  double dual_sign = 0.0;        // worst multiplier with the wrong sign
};

KktResiduals kkt_residuals(
  const SmoothProgram & program, std::span<const double> x, std::span<const double> y_eq,
  std::span<const double> y_ineq, std::span<const double> z);

}  // namespace ecotraj

#endif  // ECOTRAJ__NLP_SOLVER_HPP_
