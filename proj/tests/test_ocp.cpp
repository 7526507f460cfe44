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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ecotraj/environment.hpp"
#include "ecotraj/error.hpp"
#include "ecotraj/ocp.hpp"
#include "ecotraj/solvers.hpp"
#include "oracle/dense_qp.hpp"
#include "oracle/finite_diff.hpp"

using namespace ecotraj;

namespace
{

HorizonSpec spec_for(Method m, int steps, const VehicleParams & p = truck_preset())
{
  HorizonSpec s = HorizonSpec::for_method(m, p, steps * 0.1);
  return s;
}

struct Lead
{
  std::vector<double> s;
  std::vector<double> v;
};

Lead lead_const(double s0, double v, int steps)
{
  const LeadPrediction p = predict_leading({s0, v, 0.0}, steps, 0.1);
  return {p.s, p.v};
}

double max_row_violation(const LinearRow & row, std::span<const double> x)
{
  const double r = row.evaluate(x);
  return std::max({0.0, row.lower - r, r - row.upper});
}

}  // namespace

TEST(AccConstraints, GapExample)
{
  EXPECT_DOUBLE_EQ(acc_gap(100.0, 60.0, 10.0, 1.5), 25.0);
  HorizonSpec spec = spec_for(Method::kQp, 1);
  const VariableLayout L = VariableLayout::linear(1);
  const std::vector<double> lead{100.0, 100.0};
  const auto rows = build_acc_constraints(lead, spec, L);
  std::vector<double> x(L.num_vars(), 0.0);
  x[L.s(0)] = x[L.s(1)] = 60.0;
  x[L.v(0)] = x[L.v(1)] = 10.0;
  for (const auto & r : rows) {
    EXPECT_EQ(max_row_violation(r, x), 0.0);
  }
}

TEST(AccConstraints, LowerBoundaryIsTightenedByMargin)
{
  const HorizonSpec spec = spec_for(Method::kQp, 1);
  const VariableLayout L = VariableLayout::linear(1);
  const std::vector<double> lead{100.0, 100.0};
  const auto rows = build_acc_constraints(lead, spec, L);
  std::vector<double> x(L.num_vars(), 0.0);
  x[L.v(0)] = 10.0;
  x[L.s(0)] = 100.0 - spec.d_min - spec.time_headway * 10.0;
  EXPECT_NEAR(max_row_violation(rows[0], x), spec.acc_margin, 1e-9);
  EXPECT_EQ(spec.acc_margin, 1e-6);
}

TEST(AccConstraints, UpperBoundViolatedWhenEgoStalls)
{
  const HorizonSpec spec = spec_for(Method::kQp, 1);
  const VariableLayout L = VariableLayout::linear(1);
  const std::vector<double> lead{120.0, 121.0};
  const auto rows = build_acc_constraints(lead, spec, L);
  const std::vector<double> x(L.num_vars(), 0.0);
  EXPECT_GT(max_row_violation(rows[1], x), 20.0);
}

TEST(KinematicConstraints, ZeroAccelerationGivesConstantSpeed)
{
  const int n = 10;
  const HorizonSpec spec = spec_for(Method::kQp, n);
  const VariableLayout L = VariableLayout::linear(n);
  std::vector<double> x(L.num_vars(), 0.0);
  for (int i = 0; i <= n; ++i) {
    x[L.s(i)] = 0.1 * 7.0 * i;
    x[L.v(i)] = 7.0;
  }
  for (const auto & r : build_kinematic_constraints(7.0, spec, L)) {
    EXPECT_NEAR(r.evaluate(x), r.lower, 1e-12) << r.label;
  }
}

TEST(KinematicConstraints, OneStep)
{
  const HorizonSpec spec = spec_for(Method::kQp, 1);
  const VariableLayout L = VariableLayout::linear(1);
  std::vector<double> x(L.num_vars(), 0.0);
  x[L.v(0)] = 10.0;
  x[L.a(0)] = 1.0;
  x[L.s(1)] = 1.005;
  x[L.v(1)] = 10.1;
  for (const auto & r : build_kinematic_constraints(10.0, spec, L)) {
    EXPECT_NEAR(r.evaluate(x), r.lower, 1e-12) << r.label;
  }
}

TEST(KinematicConstraints, RolledOutTrajectoriesSatisfyEqualities)
{
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> acc(-5.0, 2.0), v0(0.0, 25.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 50;
    const HorizonSpec spec = spec_for(Method::kNlp, n);
    const VariableLayout L = VariableLayout::full(n);
    std::vector<double> x(L.num_vars(), 0.0);
    x[L.v(0)] = v0(rng);
    for (int i = 0; i < n; ++i) {
      x[L.a(i)] = acc(rng);
      x[L.s(i + 1)] = x[L.s(i)] + 0.1 * x[L.v(i)] + 0.005 * x[L.a(i)];
      x[L.v(i + 1)] = x[L.v(i)] + 0.1 * x[L.a(i)];
    }
    for (const auto & r : build_kinematic_constraints(x[L.v(0)], spec, L)) {
      EXPECT_LE(std::abs(r.evaluate(x) - r.lower), 1e-9) << r.label;
    }
  }
}

TEST(DynamicConstraints, FlatRoadAtRest)
{
  const DerivedCoeffs k = derived_coeffs(truck_preset());
  const std::vector<double> flat(3, 0.0);
  const DynamicConstraints d = build_dynamic_constraints(flat, k);
  for (double a : {-1.0, 0.0, 0.7}) {
    EXPECT_NEAR(d.residual(1, 0.0, a + k.k2, a, 0.0), 0.0, 1e-15);
  }
}

TEST(DynamicConstraints, TruckAtSpeedMatchesResistance)
{
  const DerivedCoeffs k = derived_coeffs(truck_preset());
  const std::vector<double> g{0.02};
  const DynamicConstraints d = build_dynamic_constraints(g, k);
  const double u = resistance_accel(20.0, 0.02, k);
  EXPECT_NEAR(d.residual(0, 20.0, u, 0.0, 0.0), 0.0, 1e-15);
  EXPECT_NEAR(u, 0.3292, 3e-4);
}

TEST(DynamicConstraints, BrakingBalance)
{
  const DerivedCoeffs k = derived_coeffs(sedan_preset());
  const std::vector<double> g{0.01};
  const DynamicConstraints d = build_dynamic_constraints(g, k);
  const double r = resistance_accel(15.0, 0.01, k);
  EXPECT_NEAR(d.residual(0, 15.0, 0.0, -r, 0.0), 0.0, 1e-15);
}

TEST(ProblemStructure, RowCounts)
{
  for (int n : {1, 5, 50}) {
    const Lead lead = lead_const(60.0, 10.0, n);
    const std::vector<double> slope(n + 1, 0.0);
    const HorizonProblem qp = build_qp({0.0, 10.0}, lead.s, lead.v, spec_for(Method::kQp, n));
    const HorizonProblem nlp = build_nlp(
      {0.0, 10.0}, lead.s, lead.v, slope, derived_coeffs(truck_preset()), truck_fuel_preset(),
      spec_for(Method::kNlp, n));
    const auto acc = build_acc_constraints(qp.lead_s_local(), qp.spec, qp.layout());
    // One two-sided row per node: 2 (N + 1) one-sided inequalities.
    EXPECT_EQ(2 * acc.size(), 2u * (n + 1));
    const auto kin = build_kinematic_constraints(10.0, qp.spec, qp.layout());
    EXPECT_EQ(kin.size(), 2u * n + 2u);  // two pins plus 2 N updates
    EXPECT_EQ(build_dynamic_constraints(slope, nlp.resistance).grade_accel.size(), std::size_t(n + 1));
    const auto prog = make_nlp_program(nlp);
    EXPECT_EQ(prog->num_eq(), 2 + 2 * n + (n + 1));
  }
}

TEST(ProblemStructure, PinsOnlyInitialPositionAndSpeed)
{
  const int n = 5;
  const Lead lead = lead_const(60.0, 10.0, n);
  const std::vector<double> slope(n + 1, 0.0);
  const HorizonProblem nlp = build_nlp(
    {3.0, 10.0}, lead.s, lead.v, slope, derived_coeffs(truck_preset()), truck_fuel_preset(),
    spec_for(Method::kNlp, n));
  const HorizonProblem sub = build_sqp_subproblem(
    nlp.initial, nlp.lead_s, nlp.lead_v, nlp.slope, nlp.resistance, nlp.fuel,
    std::vector<double>(n + 1, 10.0), std::vector<double>(n + 1, 0.3), nlp.spec);
  const QpData qp = to_qp_data(sub);
  const VariableLayout L = sub.layout();
  for (int r = 0; r < qp.num_rows(); ++r) {
    if (qp.lower[r] != qp.upper[r]) {
      continue;
    }
    int count = 0;
    int var = -1;
    for (const auto & t : qp.constraints) {
      if (t.row == r) {
        ++count;
        var = t.col;
      }
    }
    if (count == 1) {
      EXPECT_TRUE(var == L.s(0) || var == L.v(0)) << qp.row_labels[r];
      EXPECT_NE(var, L.u(0));
      EXPECT_NE(var, L.b(0));
    }
  }
}

TEST(ProblemStructure, LinearFormulationHasNoTractionOrGrade)
{
  const int n = 5;
  const Lead lead = lead_const(60.0, 10.0, n);
  const HorizonProblem qp = build_qp({0.0, 10.0}, lead.s, lead.v, spec_for(Method::kQp, n));
  EXPECT_FALSE(qp.layout().has_traction());
  EXPECT_TRUE(qp.slope.empty());
  const nlohmann::json dump = dump_problem(qp);
  EXPECT_FALSE(dump.contains("slope"));
  for (const auto & label : to_qp_data(qp).row_labels) {
    EXPECT_EQ(label.find("u_bound"), std::string::npos);
    EXPECT_EQ(label.find("b_bound"), std::string::npos);
    EXPECT_EQ(label.find("dyn["), std::string::npos);
  }
}

TEST(Objective, FuelFloorAtRest)
{
  const int n = 7;
  const std::vector<double> zeros(n + 1, 0.0);
  const std::vector<double> lead_s(n + 1, 40.0);
  const HorizonProblem p = build_nlp(
    {0.0, 0.0}, lead_s, zeros, zeros, derived_coeffs(truck_preset()), truck_fuel_preset(),
    spec_for(Method::kNlp, n));
  const Trajectory t = Trajectory::zeros(n + 1, true);
  EXPECT_NEAR(evaluate_objective(p, t), (n + 1) * p.spec.weights.w3 * truck_fuel_preset().o[0], 1e-12);
}

TEST(Objective, ScalesWithWeights)
{
  const int n = 8;
  const Lead lead = lead_const(55.0, 12.0, n);
  const std::vector<double> slope(n + 1, 0.01);
  HorizonSpec spec = spec_for(Method::kNlp, n);
  const HorizonProblem p1 =
    build_nlp({0.0, 10.0}, lead.s, lead.v, slope, derived_coeffs(truck_preset()), truck_fuel_preset(), spec);
  spec.weights = {2 * spec.weights.w1, 2 * spec.weights.w2, 2 * spec.weights.w3};
  const HorizonProblem p2 =
    build_nlp({0.0, 10.0}, lead.s, lead.v, slope, derived_coeffs(truck_preset()), truck_fuel_preset(), spec);
  const Trajectory t = default_initial_guess(p1);
  EXPECT_NEAR(evaluate_objective(p2, t), 2.0 * evaluate_objective(p1, t), 1e-12);
}

TEST(Objective, DoubledWeightsKeepTheArgmin)
{
  const int n = 10;
  const Lead lead = lead_const(50.0, 14.0, n);
  HorizonSpec spec = spec_for(Method::kQp, n);
  const HorizonProblem p1 = build_qp({0.0, 10.0}, lead.s, lead.v, spec);
  spec.weights = {0.2, 4.0, 0.0};
  const HorizonProblem p2 = build_qp({0.0, 10.0}, lead.s, lead.v, spec);
  const oracle::OracleResult a = oracle::solve_dense(to_qp_data(p1));
  const oracle::OracleResult b = oracle::solve_dense(to_qp_data(p2));
  ASSERT_TRUE(a.feasible && b.feasible);
  EXPECT_LT((a.x - b.x).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_NEAR(b.objective, 2.0 * a.objective, 1e-8 * (1.0 + std::abs(b.objective)));
}

TEST(BuildQp, AlreadyAtReference)
{
  const int n = 50;
  const Lead lead = lead_const(50.0, 15.0, n);
  const HorizonProblem p = build_qp({0.0, 15.0}, lead.s, lead.v, spec_for(Method::kQp, n));
  const HorizonSolution sol = solve_qp(p, SolverConfig{});
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  for (double a : sol.traj.a) {
    EXPECT_NEAR(a, 0.0, 1e-6);
  }
  EXPECT_NEAR(sol.objective, 0.0, 1e-8);
}

TEST(BuildQp, AccelerationCappedWhenLeaderPullsAway)
{
  const int n = 50;
  const Lead lead = lead_const(60.0, 12.0, n);
  const HorizonProblem p = build_qp({0.0, 0.0}, lead.s, lead.v, spec_for(Method::kQp, n));
  const HorizonSolution sol = solve_qp(p, SolverConfig{});
  ASSERT_TRUE(sol.usable());
  EXPECT_NEAR(sol.traj.a[0], 2.0, 1e-5);
  for (double a : sol.traj.a) {
    EXPECT_LE(a, 2.0 + 1e-6);
  }
}

TEST(BuildQp, TinyInstanceMatchesEnumerationOracle)
{
  const int n = 2;
  const Lead lead = lead_const(45.0, 12.0, n);
  const HorizonProblem p = build_qp({0.0, 10.0}, lead.s, lead.v, spec_for(Method::kQp, n));
  const QpData qp = to_qp_data(p);
  const oracle::OracleResult o = oracle::solve_enumerate(qp);
  ASSERT_TRUE(o.feasible);
  const HorizonSolution sol = solve_qp(p, SolverConfig{});
  ASSERT_EQ(sol.status, SolveStatus::kOptimal);
  EXPECT_NEAR(sol.objective, o.objective, 1e-6 * std::max(1.0, std::abs(o.objective)));
  for (int i = 0; i < qp.num_vars; ++i) {
    EXPECT_NEAR(sol.primal[i], o.x(i), 1e-6);
  }
}

TEST(BuildNlp, WithoutFuelMatchesTheLinearFormulationOnFlatRoad)
{
  // Leader faster than the ego: the plan accelerates, so no brake effort is used and
  // the exact problem reduces to speed tracking plus acceleration effort.
  const int n = 5;
  const Lead lead = lead_const(50.0, 13.0, n);
  const std::vector<double> flat(n + 1, 0.0);
  HorizonSpec spec = spec_for(Method::kNlp, n);
  spec.weights.w3 = 0.0;
  const HorizonProblem nlp =
    build_nlp({0.0, 12.0}, lead.s, lead.v, flat, derived_coeffs(truck_preset()), truck_fuel_preset(), spec);
  HorizonSpec qspec = spec;
  const HorizonProblem qp = build_qp({0.0, 12.0}, lead.s, lead.v, qspec);
  const HorizonSolution a = solve_nlp(nlp, SolverConfig{});
  const HorizonSolution b = solve_qp(qp, SolverConfig{});
  ASSERT_TRUE(a.usable());
  ASSERT_TRUE(b.usable());
  EXPECT_LT(oracle::rel_error(a.objective, b.objective, 1e-3), 1e-4);
}

TEST(SqpSubproblem, ExpansionAnchoredAtReference)
{
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> v(0.0, 27.0), u(0.0, 3.0);
  for (const auto & c : {truck_fuel_preset(), sedan_fuel_preset()}) {
    for (int i = 0; i < 200; ++i) {
      const double vr = v(rng), ur = u(rng);
      const FuelQuadratic q = fuel_quadratic(vr, ur, c);
      EXPECT_NEAR(q.evaluate(vr, ur), fuel_rate_hat(vr, ur, c), 1e-12);
      const FuelDerivatives d = fuel_rate_hat_derivatives(vr, ur, c);
      EXPECT_NEAR(q.dv, d.dv, 1e-12 * (1.0 + std::abs(d.dv)));
      EXPECT_NEAR(q.du, d.du, 1e-12 * (1.0 + std::abs(d.du)));
      const double h = 1e-5;
      auto qv = [&](double x) { return q.evaluate(x, ur); };
      auto qu = [&](double x) { return q.evaluate(vr, x); };
      EXPECT_LT(oracle::rel_error(oracle::central_diff(qv, vr, h), d.dv), 1e-6);
      EXPECT_LT(oracle::rel_error(oracle::central_diff(qu, ur, h), d.du), 1e-6);
    }
  }
}

TEST(SqpSubproblem, QuadraticModelIsConvex)
{
  for (double v = 0.0; v <= 30.0; v += 0.5) {
    const FuelQuadratic q = fuel_quadratic(v, 0.5, sedan_fuel_preset());
    EXPECT_GE(q.hvv, -1e-15);
    EXPECT_GE(q.huu, -1e-15);
    EXPECT_GE(q.hvv * q.huu - q.hvu * q.hvu, -1e-12);
  }
}

TEST(SqpSubproblem, LinearizedResistanceErrorIsQuadratic)
{
  const int n = 3;
  const Lead lead = lead_const(50.0, 12.0, n);
  const std::vector<double> slope(n + 1, 0.015);
  const DerivedCoeffs k = derived_coeffs(truck_preset());
  const std::vector<double> ref_v{10.0, 11.0, 12.0, 13.0};
  const std::vector<double> ref_u(n + 1, 0.4);
  const HorizonProblem sub = build_sqp_subproblem(
    {0.0, 10.0}, lead.s, lead.v, slope, k, truck_fuel_preset(), ref_v, ref_u, spec_for(Method::kSqp, n));
  const QpData qp = to_qp_data(sub);
  const VariableLayout L = sub.layout();
  for (int i = 0; i <= n; ++i) {
    int row = -1;
    for (int r = 0; r < qp.num_rows(); ++r) {
      if (qp.row_labels[r] == "dyn[" + std::to_string(i) + "]") {
        row = r;
      }
    }
    ASSERT_GE(row, 0);
    for (double delta : {0.0, 0.5, -1.3}) {
      // Plug a = b = 0 and u = exact resistance at V + delta; the row residual is then
      // exactly the linearization error of the drag term.
      std::vector<double> x(qp.num_vars, 0.0);
      const double vv = ref_v[i] + delta;
      x[L.v(i)] = vv;
      x[L.u(i)] = resistance_accel(vv, slope[i], k);
      double lhs = 0.0;
      for (const auto & t : qp.constraints) {
        if (t.row == row) {
          lhs += t.value * x[t.col];
        }
      }
      EXPECT_NEAR(lhs - qp.lower[row], k.k1 * delta * delta, 1e-13);
    }
  }
}
