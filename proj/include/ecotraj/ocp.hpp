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

#ifndef ECOTRAJ__OCP_HPP_
#define ECOTRAJ__OCP_HPP_

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecotraj/fuel_model.hpp"
#include "ecotraj/program.hpp"
#include "ecotraj/vehicle_model.hpp"

namespace ecotraj
{

enum class Method { kQp, kSqp, kNlp };

std::string_view to_string(Method method);
/// "qp", "sqp" or "nlp" (case-insensitive).
Method method_from_string(std::string_view text);

enum class ProblemKind { kQp, kSqpSubproblem, kNlp };

struct Weights
{
  double w1 = 0.1;  // speed tracking
  double w2 = 2.0;  // acceleration and brake effort
  double w3 = 0.0;  // fuel
  bool operator==(const Weights &) const = default;
};

struct HorizonSpec
{
  int steps = 50;
  double dt = 0.1;            // s
  double time_headway = 1.5;  // s
  double d_min = 10.0;        // m
  double d_max = 100.0;       // m
  double d_init = 50.0;       // m
  Weights weights;
  VehicleBounds bounds;
  /// Gap rows are tightened by this margin on both sides.
  double acc_margin = 1e-6;
  /// When false, the environment supplies only the slope at the current position.
  bool use_slope_prediction = true;

  double horizon() const { return steps * dt; }
  void validate() const;

  /// Default weights and gap limits of each formulation.
  static HorizonSpec for_method(
    Method method, const VehicleParams & params, double horizon_s, double dt = 0.1);
};

/// Ego state at the start of a horizon. `a_v` is the apparent acceleration applied
/// during the previous step (used for the jerk limit at execution).
struct EgoState
{
  double s = 0.0;
  double v = 0.0;
  double u = 0.0;
  double a_v = 0.0;
  double a_b = 0.0;
};

/// Trajectory over N+1 nodes. `u` and `b` are empty for the linear formulation.
struct Trajectory
{
  std::vector<double> s;
  std::vector<double> v;
  std::vector<double> u;
  std::vector<double> a;
  std::vector<double> b;

  std::size_t size() const { return s.size(); }
  static Trajectory zeros(std::size_t nodes, bool with_traction);
};

/// Variable numbering: block of `per_step` entries per node, slots in the order
/// s, v, [u], a, [b].
struct VariableLayout
{
  int steps = 0;
  int per_step = 3;
  int slot_s = 0;
  int slot_v = 1;
  int slot_u = -1;
  int slot_a = 2;
  int slot_b = -1;

  static VariableLayout linear(int steps);
  static VariableLayout full(int steps);
  int num_vars() const { return per_step * (steps + 1); }
  int s(int i) const { return per_step * i + slot_s; }
  int v(int i) const { return per_step * i + slot_v; }
  int u(int i) const { return per_step * i + slot_u; }
  int a(int i) const { return per_step * i + slot_a; }
  int b(int i) const { return per_step * i + slot_b; }
  bool has_traction() const { return slot_u >= 0; }

  std::vector<double> pack(const Trajectory & traj) const;
  Trajectory unpack(std::span<const double> x) const;
};

struct LinearRow
{
  std::string label;
  int stage = 0;
  std::vector<std::pair<int, double>> terms;  // (variable, coefficient)
  double lower = 0.0;
  double upper = 0.0;

  double evaluate(std::span<const double> x) const;
};

/// Gap S_l - S - t_h V.
double acc_gap(double lead_s, double s, double v, double time_headway);

/// d_min + margin <= S_l,i - S_i - t_h V_i <= d_max - margin for every node, written
/// as rows on (S_i, V_i). Positions are local to the horizon origin.
std::vector<LinearRow> build_acc_constraints(
  std::span<const double> lead_s_local, const HorizonSpec & spec, const VariableLayout & layout);

/// Pins S_0 and V_0, then the exact double-integrator updates for every interval.
std::vector<LinearRow> build_kinematic_constraints(
  double v0, const HorizonSpec & spec, const VariableLayout & layout);

/// U_i - A_i - B_i - k1 V_i^2 - k2 cos(G_i) - k3 sin(G_i) = 0.
struct DynamicConstraints
{
  DerivedCoeffs coeffs;
  std::vector<double> grade_accel;  // k2 cos(G_i) + k3 sin(G_i)

  double residual(int i, double v, double u, double a, double b) const;
};

DynamicConstraints build_dynamic_constraints(
  std::span<const double> slope, const DerivedCoeffs & coeffs);

/// Local quadratic fuel model around (v_ref, u_ref) with a PSD-projected Hessian.
struct FuelQuadratic
{
  double value = 0.0;  // F at the reference
  double dv = 0.0;
  double du = 0.0;
  double hvv = 0.0;
  double hvu = 0.0;
  double huu = 0.0;
  double v_ref = 0.0;
  double u_ref = 0.0;

  double evaluate(double v, double u) const;
};

FuelQuadratic fuel_quadratic(double v_ref, double u_ref, const FuelCoefficients & coeffs);

/// One receding-horizon instance. Positions in `lead_s` are absolute; solvers work
/// relative to `initial.s`.
struct HorizonProblem
{
  ProblemKind kind = ProblemKind::kQp;
  HorizonSpec spec;
  EgoState initial;
  std::vector<double> lead_s;
  std::vector<double> lead_v;
  std::vector<double> slope;   // empty for the linear formulation
  std::vector<double> ref_v;   // linearization point (SQP subproblem)
  std::vector<double> ref_u;
  DerivedCoeffs resistance;
  FuelCoefficients fuel;

  int steps() const { return spec.steps; }
  VariableLayout layout() const;
  std::vector<double> lead_s_local() const;
};

HorizonProblem build_qp(
  const EgoState & x0, std::span<const double> lead_s, std::span<const double> lead_v,
  const HorizonSpec & spec);

HorizonProblem build_nlp(
  const EgoState & x0, std::span<const double> lead_s, std::span<const double> lead_v,
  std::span<const double> slope, const DerivedCoeffs & coeffs, const FuelCoefficients & fuel,
  const HorizonSpec & spec);

HorizonProblem build_sqp_subproblem(
  const EgoState & x0, std::span<const double> lead_s, std::span<const double> lead_v,
  std::span<const double> slope, const DerivedCoeffs & coeffs, const FuelCoefficients & fuel,
  std::span<const double> ref_v, std::span<const double> ref_u, const HorizonSpec & spec);

/// Matrix form of a QP or SQP subproblem (variables in local coordinates). Includes
/// the box bounds as rows so the ADMM solver can treat everything uniformly.
QpData to_qp_data(const HorizonProblem & problem);

/// Exact nonlinear formulation as a smooth program.
std::unique_ptr<SmoothProgram> make_nlp_program(const HorizonProblem & problem);

/// Constant-speed rollout at the current speed, with traction or brake balancing the
/// resistance so the dynamics hold exactly. Positions are absolute.
Trajectory default_initial_guess(const HorizonProblem & problem);

/// Objective value of a trajectory (absolute positions), by the formulation's kind.
double evaluate_objective(const HorizonProblem & problem, const Trajectory & traj);

/// Independent residual check using the formulas directly (not the assembled matrices).
struct ResidualReport
{
  double pin = 0.0;
  double kinematic = 0.0;
  double dynamic = 0.0;        // exact dynamics; zero for the linear formulation
  double acc_violation = 0.0;  // beyond [d_min, d_max]
  double bound_violation = 0.0;
  double min_fuel_rate = 0.0;  // min predicted fuel rate on the plan (full formulation)
  std::string worst;           // label of the largest violation

  double max_violation() const;
};

ResidualReport check_solution(const HorizonProblem & problem, const Trajectory & traj);

/// Assembled problem (spec, data, matrices as triplets) for debugging.
nlohmann::json dump_problem(const HorizonProblem & problem);

}  // namespace ecotraj

#endif  // ECOTRAJ__OCP_HPP_
