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

#ifndef ECOTRAJ__SOLVERS_HPP_
#define ECOTRAJ__SOLVERS_HPP_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecotraj/nlp_solver.hpp"
#include "ecotraj/ocp.hpp"
#include "ecotraj/qp_solver.hpp"

namespace ecotraj
{

struct SolverConfig
{
  int max_iterations = 200;          // interior-point iterations
  int admm_max_iterations = 20000;
  double feasibility_tolerance = 1e-6;
  double optimality_tolerance = 1e-6;
  double sqp_step_tolerance = 1e-4;  // max|dV| + max|dU| between outer iterates
  int sqp_max_outer_iterations = 20;
  bool sqp_damping = true;
  bool polish = true;
  double time_limit_ms = 0.0;        // 0 disables the limit
  /// Collect per-iteration solver traces into the diagnostics.
  bool trace = false;

  void validate() const;
  QpSettings qp_settings() const;
  IpmSettings ipm_settings() const;
  bool operator==(const SolverConfig &) const = default;
};

struct SolveDiagnostics
{
  int iterations = 0;      // inner solver iterations (summed over SQP iterations)
  int sqp_iterations = 0;
  int sqp_damped_steps = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool polished = false;
  std::string infeasible_row;
  double solve_ms = 0.0;
  ResidualReport residuals;
  nlohmann::json trace;
};

struct HorizonSolution
{
  SolveStatus status = SolveStatus::kNumericalFailure;
  Trajectory traj;  // absolute positions
  double objective = 0.0;
  /// gap - d_min and d_max - gap at every node.
  std::vector<double> acc_slack_lower;
  std::vector<double> acc_slack_upper;
  /// Solver-space primal and dual vectors (positions relative to the horizon origin).
  std::vector<double> primal;
  std::vector<double> dual;
  SolveDiagnostics diag;

  /// The plan satisfies the linear constraints and may be executed.
  bool usable() const;
};

/// Linear formulation solved by ADMM. `warm` re-uses the primal and dual vectors of a
/// previous solution of the same structure.
HorizonSolution solve_qp(
  const HorizonProblem & problem, const SolverConfig & config,
  const HorizonSolution * warm = nullptr);

/// Exact formulation solved by the interior-point method.
HorizonSolution solve_nlp(
  const HorizonProblem & problem, const SolverConfig & config,
  const Trajectory * initial_guess = nullptr);

/// Exact formulation solved by sequential convex QPs (takes a kNlp problem).
HorizonSolution solve_sqp(
  const HorizonProblem & problem, const SolverConfig & config,
  const Trajectory * initial_guess = nullptr);

/// Dispatches on the method; the problem kind must match (kQp for Method::kQp).
HorizonSolution solve_horizon(
  Method method, const HorizonProblem & problem, const SolverConfig & config);

/// Max |U - A - B - a_R(V, G)| over the plan.
double exact_dynamics_residual(const HorizonProblem & problem, const Trajectory & traj);

}  // namespace ecotraj

#endif  // ECOTRAJ__SOLVERS_HPP_
