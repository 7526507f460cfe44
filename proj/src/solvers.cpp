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

#include "ecotraj/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "ecotraj/error.hpp"

namespace ecotraj
{

namespace
{

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start)
{
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

constexpr double kUsableTolerance = 1e-5;

/// The first gap row involves only pinned values, so it decides feasibility up front.
bool initial_gap_infeasible(const HorizonProblem & p)
{
  const HorizonSpec & spec = p.spec;
  const double gap = acc_gap(p.lead_s[0], p.initial.s, p.initial.v, spec.time_headway);
  return gap < spec.d_min + spec.acc_margin || gap > spec.d_max - spec.acc_margin;
}

void finish(const HorizonProblem & problem, HorizonSolution & sol)
{
  const HorizonSpec & spec = problem.spec;
  const int n = spec.steps;
  sol.acc_slack_lower.resize(n + 1);
  sol.acc_slack_upper.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double gap = acc_gap(problem.lead_s[i], sol.traj.s[i], sol.traj.v[i], spec.time_headway);
    sol.acc_slack_lower[i] = gap - spec.d_min;
    sol.acc_slack_upper[i] = spec.d_max - gap;
  }
  sol.diag.residuals = check_solution(problem, sol.traj);
}

HorizonSolution infeasible_start(const HorizonProblem & problem)
{
  HorizonSolution sol;
  sol.status = SolveStatus::kInfeasible;
  sol.diag.infeasible_row = "acc[0]";
  sol.traj = default_initial_guess(problem);
  finish(problem, sol);
  return sol;
}

Trajectory to_absolute(const VariableLayout & layout, std::span<const double> x, double origin)
{
  Trajectory t = layout.unpack(x);
  for (double & s : t.s) {
    s += origin;
  }
  return t;
}

std::vector<double> to_local(const VariableLayout & layout, const Trajectory & t, double origin)
{
  std::vector<double> x = layout.pack(t);
  for (int i = 0; i <= layout.steps; ++i) {
    x[layout.s(i)] -= origin;
  }
  return x;
}

}  // namespace

void SolverConfig::validate() const
{
  if (max_iterations < 1 || admm_max_iterations < 1 || sqp_max_outer_iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "iteration caps must be at least 1");
  }
  if (!(feasibility_tolerance > 0.0) || !(optimality_tolerance > 0.0) ||
      !(sqp_step_tolerance > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tolerances must be positive");
  }
  if (time_limit_ms < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "time limit must be non-negative");
  }
}

QpSettings SolverConfig::qp_settings() const
{
  QpSettings s;
  s.eps_abs = feasibility_tolerance;
  s.eps_rel = optimality_tolerance;
  s.max_iter = admm_max_iterations;
  s.polish = polish;
  s.time_limit_ms = time_limit_ms;
  s.trace = trace;
  return s;
}

IpmSettings SolverConfig::ipm_settings() const
{
  IpmSettings s;
  // The barrier method converges superlinearly at the end; aim two digits tighter.
  s.tol = 1e-2 * std::min(feasibility_tolerance, optimality_tolerance);
  s.max_iter = max_iterations;
  s.time_limit_ms = time_limit_ms;
  s.trace = trace;
  return s;
}

bool HorizonSolution::usable() const
{
  if (status != SolveStatus::kOptimal && status != SolveStatus::kMaxIterations) {
    return false;
  }
  const ResidualReport & r = diag.residuals;
  return std::max({r.pin, r.kinematic, r.acc_violation, r.bound_violation}) <= kUsableTolerance;
}

double exact_dynamics_residual(const HorizonProblem & problem, const Trajectory & traj)
{
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double r = resistance_accel(traj.v[i], problem.slope[i], problem.resistance);
    worst = std::max(worst, std::abs(traj.u[i] - traj.a[i] - traj.b[i] - r));
  }
  return worst;
}

HorizonSolution solve_qp(
  const HorizonProblem & problem, const SolverConfig & config, const HorizonSolution * warm)
{
  if (problem.kind == ProblemKind::kNlp) {
    throw Error(ErrorCode::kInvalidArgument, "solve_qp needs a linear or SQP subproblem");
  }
  config.validate();
  const auto start = Clock::now();
  if (initial_gap_infeasible(problem)) {
    HorizonSolution sol = infeasible_start(problem);
    sol.diag.solve_ms = elapsed_ms(start);
    return sol;
  }
  const QpData qp = to_qp_data(problem);
  const QpSettings settings = config.qp_settings();
  QpWarmStart ws;
  const QpWarmStart * ws_ptr = nullptr;
  if (warm != nullptr && static_cast<int>(warm->primal.size()) == qp.num_vars) {
    ws.x = warm->primal;
    if (static_cast<int>(warm->dual.size()) == qp.num_rows()) {
      ws.y = warm->dual;
    }
    ws_ptr = &ws;
  }
  QpResult r = solve_qp_admm(qp, settings, ws_ptr);
  if (r.status == SolveStatus::kOptimal && !r.polished && r.primal_residual > kUsableTolerance) {
    // Relative stopping can leave an absolute residual too large to execute; refine.
    QpSettings tight = settings;
    tight.eps_abs = std::min(settings.eps_abs, 0.1 * kUsableTolerance);
    tight.eps_rel = 1e-2 * settings.eps_rel;
    const QpWarmStart again{r.x, r.y};
    QpResult refined = solve_qp_admm(qp, tight, &again);
    refined.iterations += r.iterations;
    if (refined.status == SolveStatus::kOptimal || refined.status == SolveStatus::kMaxIterations) {
      r = std::move(refined);
    }
  }

  HorizonSolution sol;
  sol.status = r.status;
  const VariableLayout layout = problem.layout();
  sol.traj = to_absolute(layout, r.x, problem.initial.s);
  sol.primal = r.x;
  sol.dual = r.y;
  sol.objective = r.objective;
  sol.diag.iterations = r.iterations;
  sol.diag.primal_residual = r.primal_residual;
  sol.diag.dual_residual = r.dual_residual;
  sol.diag.polished = r.polished;
  if (r.infeasible_row >= 0) {
    sol.diag.infeasible_row = qp.row_labels[r.infeasible_row];
  }
  if (settings.trace) {
    sol.diag.trace = std::move(r.trace);
  }
  finish(problem, sol);
  sol.diag.solve_ms = elapsed_ms(start);
  return sol;
}

HorizonSolution solve_nlp(
  const HorizonProblem & problem, const SolverConfig & config, const Trajectory * initial_guess)
{
  if (problem.kind != ProblemKind::kNlp) {
    throw Error(ErrorCode::kInvalidArgument, "solve_nlp needs the exact formulation");
  }
  config.validate();
  const auto start = Clock::now();
  if (initial_gap_infeasible(problem)) {
    HorizonSolution sol = infeasible_start(problem);
    sol.diag.solve_ms = elapsed_ms(start);
    return sol;
  }
  const auto program = make_nlp_program(problem);
  const VariableLayout layout = problem.layout();
  const Trajectory guess =
    initial_guess != nullptr ? *initial_guess : default_initial_guess(problem);
  const std::vector<double> x0 = to_local(layout, guess, problem.initial.s);
  const IpmSettings settings = config.ipm_settings();
  IpmResult r = solve_ipm(*program, x0, settings);

  HorizonSolution sol;
  sol.status = r.status;
  sol.traj = to_absolute(layout, r.x, problem.initial.s);
  sol.primal = r.x;
  sol.dual = r.y_eq;
  sol.dual.insert(sol.dual.end(), r.y_ineq.begin(), r.y_ineq.end());
  sol.objective = r.objective;
  sol.diag.iterations = r.iterations;
  sol.diag.primal_residual = r.primal_infeasibility;
  sol.diag.dual_residual = r.dual_infeasibility;
  if (settings.trace) {
    sol.diag.trace = std::move(r.trace);
  }
  finish(problem, sol);
  sol.diag.solve_ms = elapsed_ms(start);
  return sol;
}

HorizonSolution solve_sqp(
  const HorizonProblem & problem, const SolverConfig & config, const Trajectory * initial_guess)
{
  if (problem.kind != ProblemKind::kNlp) {
    throw Error(ErrorCode::kInvalidArgument, "solve_sqp needs the exact formulation");
  }
  config.validate();
  const auto start = Clock::now();
  if (initial_gap_infeasible(problem)) {
    HorizonSolution sol = infeasible_start(problem);
    sol.diag.solve_ms = elapsed_ms(start);
    return sol;
  }
  Trajectory iterate = initial_guess != nullptr ? *initial_guess : default_initial_guess(problem);
  const int n = problem.spec.steps;

  HorizonSolution sol;
  sol.status = SolveStatus::kMaxIterations;
  HorizonSolution qp_sol;
  bool have_qp = false;
  double prev_dyn = kInf;
  if (config.trace) {
    sol.diag.trace = nlohmann::json::array();
  }
  SolverConfig inner = config;
  inner.trace = false;

  for (int k = 1; k <= config.sqp_max_outer_iterations; ++k) {
    const HorizonProblem sub = build_sqp_subproblem(
      problem.initial, problem.lead_s, problem.lead_v, problem.slope, problem.resistance,
      problem.fuel, iterate.v, iterate.u, problem.spec);
    qp_sol = solve_qp(sub, inner, have_qp ? &qp_sol : nullptr);
    have_qp = true;
    sol.diag.iterations += qp_sol.diag.iterations;
    sol.diag.sqp_iterations = k;
    if (config.time_limit_ms > 0.0 && elapsed_ms(start) > config.time_limit_ms) {
      sol.status = SolveStatus::kTimeLimit;
      break;
    }
    if (qp_sol.status != SolveStatus::kOptimal) {
      sol.status = qp_sol.status;
      sol.diag.infeasible_row = qp_sol.diag.infeasible_row;
      iterate = qp_sol.traj;
      break;
    }

    Trajectory candidate = qp_sol.traj;
    double dyn = exact_dynamics_residual(problem, candidate);
    if (config.sqp_damping && k > 1) {
      double step = 1.0;
      while (dyn > prev_dyn && step > 1.0 / 64.0) {
        step *= 0.5;
        for (int i = 0; i <= n; ++i) {
          candidate.s[i] = iterate.s[i] + step * (qp_sol.traj.s[i] - iterate.s[i]);
          candidate.v[i] = iterate.v[i] + step * (qp_sol.traj.v[i] - iterate.v[i]);
          candidate.u[i] = iterate.u[i] + step * (qp_sol.traj.u[i] - iterate.u[i]);
          candidate.a[i] = iterate.a[i] + step * (qp_sol.traj.a[i] - iterate.a[i]);
          candidate.b[i] = iterate.b[i] + step * (qp_sol.traj.b[i] - iterate.b[i]);
        }
        dyn = exact_dynamics_residual(problem, candidate);
        ++sol.diag.sqp_damped_steps;
      }
    }
    double dv = 0.0;
    double du = 0.0;
    for (int i = 0; i <= n; ++i) {
      dv = std::max(dv, std::abs(candidate.v[i] - iterate.v[i]));
      du = std::max(du, std::abs(candidate.u[i] - iterate.u[i]));
    }
    iterate = std::move(candidate);
    prev_dyn = dyn;
    if (config.trace) {
      sol.diag.trace.push_back(
        {{"iter", k},
         {"step_v", dv},
         {"step_u", du},
         {"dynamics_residual", dyn},
         {"qp_iterations", qp_sol.diag.iterations},
         {"objective", evaluate_objective(problem, iterate)}});
    }
    if (dv + du < config.sqp_step_tolerance) {
      sol.status = SolveStatus::kOptimal;
      break;
    }
  }

  sol.traj = std::move(iterate);
  sol.primal = to_local(problem.layout(), sol.traj, problem.initial.s);
  sol.dual = qp_sol.dual;
  sol.objective = evaluate_objective(problem, sol.traj);
  sol.diag.primal_residual = qp_sol.diag.primal_residual;
  sol.diag.dual_residual = qp_sol.diag.dual_residual;
  sol.diag.polished = qp_sol.diag.polished;
  finish(problem, sol);
  sol.diag.solve_ms = elapsed_ms(start);
  return sol;
}

HorizonSolution solve_horizon(
  Method method, const HorizonProblem & problem, const SolverConfig & config)
{
  switch (method) {
    case Method::kQp:
      return solve_qp(problem, config);
    case Method::kSqp:
      return solve_sqp(problem, config);
    case Method::kNlp:
      return solve_nlp(problem, config);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown method");
}

}  // namespace ecotraj
