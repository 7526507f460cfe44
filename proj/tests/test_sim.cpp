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
#include <filesystem>

#include <gtest/gtest.h>

#include "ecotraj/environment.hpp"
#include "ecotraj/error.hpp"
#include "ecotraj/sim.hpp"

using namespace ecotraj;

namespace
{

DrivingCycle constant_cycle(double v, double seconds)
{
  const std::vector<double> t{0.0, seconds};
  const std::vector<double> s{v, v};
  return make_driving_cycle("constant", t, s, 0.1);
}

DrivingCycle urban_prefix(double seconds)
{
  const RawCycle raw = synthetic_urban_cycle();
  std::vector<double> t, v;
  for (std::size_t i = 0; i < raw.time.size() && raw.time[i] <= seconds; ++i) {
    t.push_back(raw.time[i]);
    v.push_back(raw.speed[i]);
  }
  return make_driving_cycle("urban_prefix", t, v, 0.1);
}

EpisodeConfig config_for(const char * vehicle, Method m, DrivingCycle cycle, SlopeProfile road)
{
  EpisodeConfig c;
  c.vehicle = vehicle_preset(vehicle);
  c.fuel = fuel_preset(vehicle);
  c.method = m;
  c.cycle = std::move(cycle);
  c.road = std::move(road);
  return c;
}

double poly_rate(double v, double u, const FuelCoefficients & f)
{
  const double o = f.o[0] + f.o[1] * v + f.o[2] * v * v + f.o[3] * v * v * v + f.o[4] * v * v * v * v;
  const double c = f.c[0] + f.c[1] * v + f.c[2] * v * v;
  return o + u * c;
}

}  // namespace

TEST(ExecuteControl, JerkLimitClampsAcceleration)
{
  const VehicleParams p = truck_preset();
  ASSERT_EQ(p.bounds.jerk_max, 1.0);
  EgoState x;
  x.v = 10.0;
  const EgoState next = execute_control(x, ControlCommand{false, 2.0, 0.0, 0.0}, 0.0, 0.1, p);
  EXPECT_NEAR(next.a_v, 0.1, 1e-12);
  EXPECT_NEAR(next.v, 10.01, 1e-12);
}

TEST(ExecuteControl, ZeroAccelerationAtRestHoldsWithRollingTraction)
{
  const VehicleParams p = truck_preset();
  const EgoState x;
  const EgoState next = execute_control(x, ControlCommand{false, 0.0, 0.0, 0.0}, 0.0, 0.1, p);
  EXPECT_EQ(next.v, 0.0);
  EXPECT_EQ(next.s, 0.0);
  EXPECT_NEAR(next.u, derived_coeffs(p).k2, 1e-15);
  EXPECT_EQ(next.a_b, 0.0);
}

TEST(ExecuteControl, SlopeMismatchShiftsAccelerationByResistanceDelta)
{
  const VehicleParams p = sedan_preset();
  const DerivedCoeffs k = derived_coeffs(p);
  EgoState x;
  x.v = 15.0;
  const ControlCommand cmd{true, 0.0, 0.8, 0.0};
  const double planned = 0.01;
  const double actual = 0.015;
  x.a_v = cmd.u - 0.5 * (resistance_accel(15.0, planned, k) + resistance_accel(15.0, actual, k));
  const EgoState a = execute_control(x, cmd, planned, 0.1, p);
  const EgoState b = execute_control(x, cmd, actual, 0.1, p);
  EXPECT_EQ(a.u, cmd.u);
  EXPECT_EQ(b.u, cmd.u);
  EXPECT_NEAR(a.a_v - b.a_v, resistance_accel(15.0, actual, k) - resistance_accel(15.0, planned, k), 1e-12);
}

TEST(ExecuteControl, SpeedNeverNegative)
{
  const VehicleParams p = truck_preset();
  EgoState x;
  x.v = 0.05;
  x.a_v = -3.0;
  const EgoState next = execute_control(x, ControlCommand{false, -3.0, 0.0, 0.0}, 0.0, 0.1, p);
  EXPECT_EQ(next.v, 0.0);
  EXPECT_NEAR(next.s, 0.0025, 1e-15);
}

TEST(MeterFuel, SedanIdleForOneSecond)
{
  const FuelCoefficients f = sedan_fuel_preset();
  double total = 0.0;
  for (int i = 0; i < 10; ++i) {
    total += meter_fuel(0.0, 0.0, f, 0.1);
  }
  EXPECT_NEAR(total, 0.14627, 1e-12);
}

TEST(MeterFuel, TruckCruise)
{
  const FuelCoefficients f = truck_fuel_preset();
  double total = 0.0;
  for (int i = 0; i < 10; ++i) {
    total += meter_fuel(10.0, 0.5, f, 0.1);
  }
  EXPECT_NEAR(total, poly_rate(10.0, 0.5, f), 1e-12);
  EXPECT_NEAR(total, 4.7465, 1e-3);
}

TEST(MeterFuel, HardBrakingLeaderMetersAtZeroTraction)
{
  const DerivedCoeffs k = derived_coeffs(truck_preset());
  const FuelCoefficients f = truck_fuel_preset();
  const double u = leader_traction(-3.0, 12.0, 0.0, k);
  EXPECT_EQ(u, 0.0);
  EXPECT_NEAR(meter_fuel(12.0, u, f, 0.1), 0.1 * std::max(poly_rate(12.0, 0.0, f), f.o[0]), 1e-15);
}

TEST(MeterFuel, NeverBelowIdle)
{
  const FuelCoefficients f = sedan_fuel_preset();
  for (double v = 0.0; v <= 40.0; v += 0.5) {
    EXPECT_GE(meter_fuel(v, 0.0, f, 0.1), 0.1 * f.o[0] - 1e-15);
  }
}

TEST(ComputeMetrics, LeaderRowFigures)
{
  RunTotals leader;
  leader.travel_time = 13477.20;
  leader.travel_distance = 123177.83;
  leader.fuel_consumption = 20525.89;
  leader.episodes = leader.completed_episodes = 1;
  const EpisodeMetrics m = compute_metrics(leader);
  EXPECT_NEAR(m.fuel_efficiency, 16.6636, 5e-5);
  EXPECT_NEAR(m.average_speed, 9.1397, 5e-5);
  EXPECT_NEAR(m.average_fuel_rate, 20525.89 / 13477.20, 1e-12);

  RunTotals ego = leader;
  ego.fuel_consumption = 14.2306 * leader.travel_distance / 100.0;
  const EpisodeMetrics e = compute_metrics(ego, &leader);
  EXPECT_NEAR(e.efficiency_improvement_vs_leading, 14.60, 5e-3);
}

TEST(ComputeMetrics, ZeroDistanceIsUndefined)
{
  RunTotals t;
  t.travel_time = 10.0;
  try {
    (void)compute_metrics(t);
    FAIL();
  } catch (const Error & e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedMetric);
  }
}

TEST(AgentName, Conventions)
{
  EpisodeConfig c;
  c.method = Method::kNlp;
  EXPECT_EQ(c.agent_name(), "Truck-NLP-5");
  c.use_slope_prediction = false;
  EXPECT_EQ(c.agent_name(), "Truck-NLP-5F");
  c.vehicle = sedan_preset();
  c.method = Method::kSqp;
  c.horizon_s = 10.0;
  c.use_slope_prediction = true;
  EXPECT_EQ(c.agent_name(), "Sedan-SQP-10");
  EXPECT_EQ(leader_name(c.vehicle), "Sedan-L");
}

TEST(RunEpisode, SteadyStateHoldsSpeedAndGap)
{
  // Fuel-aware plans may drop back inside the gap band first; all settle on the leader speed.
  for (Method m : {Method::kQp, Method::kSqp, Method::kNlp}) {
    const EpisodeConfig c = config_for("sedan", m, constant_cycle(15.0, 90.0), SlopeProfile::flat());
    const EpisodeResult r = run_episode(c);
    ASSERT_TRUE(r.metrics.completed) << to_string(m) << " " << r.failure;
    EXPECT_EQ(r.metrics.constraint_violation_count, 0);
    const HorizonSpec spec = c.horizon_spec();
    for (const auto & row : r.log.rows) {
      EXPECT_GT(row.gap, spec.d_min);
      EXPECT_LT(row.gap, spec.d_max);
      if (m == Method::kQp) {
        EXPECT_NEAR(row.v, 15.0, 1e-6);
      } else if (row.t >= 87.0) {
        EXPECT_NEAR(row.v, 15.0, 0.05) << to_string(m);
      }
    }
  }
}

TEST(RunEpisode, LogsAreKinematicallyAndDynamicallyConsistent)
{
  for (const char * veh : {"truck", "sedan"}) {
    for (Method m : {Method::kQp, Method::kSqp, Method::kNlp}) {
      const EpisodeConfig c = config_for(veh, m, urban_prefix(120.0), SlopeProfile::rolling());
      const EpisodeResult r = run_episode(c);
      const DerivedCoeffs k = derived_coeffs(c.vehicle);
      const auto & rows = r.log.rows;
      ASSERT_GE(rows.size(), 2u);
      for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const LogRow & a = rows[i];
        const LogRow & b = rows[i + 1];
        EXPECT_NEAR(b.s, a.s + a.v * 0.1 + 0.5 * a.a_v * 0.01, 1e-9);
        EXPECT_NEAR(b.v, a.v + a.a_v * 0.1, 1e-9);
        EXPECT_NEAR(a.u - a.a_v - a.a_b, resistance_accel(a.v, a.theta, k), 1e-9);
        EXPECT_EQ(a.theta, slope_at(a.s, c.road));
        EXPECT_GE(b.fuel_cum, a.fuel_cum);
        EXPECT_GE(a.v, 0.0);
        EXPECT_GE(a.u, 0.0);
        EXPECT_LE(a.u, c.vehicle.bounds.u_max);
        EXPECT_GE(a.a_b, 0.0);
      }
      if (r.metrics.completed && m != Method::kSqp) {
        EXPECT_EQ(r.metrics.constraint_violation_count, 0) << veh << " " << to_string(m);
      }
    }
  }
}

TEST(RunEpisode, MetricIdentitiesHoldOnTheRawLog)
{
  const EpisodeConfig c = config_for("sedan", Method::kNlp, urban_prefix(90.0), SlopeProfile::steep());
  const EpisodeResult r = run_episode(c);
  ASSERT_TRUE(r.metrics.completed);
  const auto & rows = r.log.rows;
  const double time = rows.back().t - rows.front().t;
  const double dist = rows.back().s - rows.front().s;
  const double fuel = rows.back().fuel_cum - rows.front().fuel_cum;
  EXPECT_DOUBLE_EQ(r.metrics.travel_time, time);
  EXPECT_DOUBLE_EQ(r.metrics.travel_distance, dist);
  EXPECT_DOUBLE_EQ(r.metrics.fuel_consumption, fuel);
  EXPECT_DOUBLE_EQ(r.metrics.fuel_efficiency, fuel * 100.0 / dist);
  EXPECT_DOUBLE_EQ(r.metrics.average_speed, dist / time);
  EXPECT_DOUBLE_EQ(r.metrics.average_fuel_rate, fuel / time);
  const double leader_eff =
    r.leader_window_totals.fuel_consumption * 100.0 / r.leader_window_totals.travel_distance;
  EXPECT_DOUBLE_EQ(
    r.metrics.efficiency_improvement_vs_leading,
    (leader_eff - r.metrics.fuel_efficiency) / leader_eff * 100.0);

  const EpisodeMetrics again = compute_metrics(r.log, 10.0, c.horizon_spec().d_max);
  EXPECT_EQ(again.fuel_efficiency, r.metrics.fuel_efficiency);
  EXPECT_EQ(again.constraint_violation_count, r.metrics.constraint_violation_count);
}

TEST(RunEpisode, LeaderUsesTheSameMetering)
{
  const EpisodeConfig c = config_for("truck", Method::kQp, urban_prefix(60.0), SlopeProfile::rolling());
  const EpisodeResult r = run_episode(c);
  const DerivedCoeffs k = derived_coeffs(c.vehicle);
  const auto & rows = r.leader_log.rows;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double u = std::max(0.0, rows[i].a_v + resistance_accel(rows[i].v, rows[i].theta, k));
    EXPECT_NEAR(rows[i].u, u, 1e-12);
    EXPECT_NEAR(rows[i + 1].fuel_cum - rows[i].fuel_cum, meter_fuel(rows[i + 1].v, u, c.fuel, 0.1), 1e-12);
  }
}

TEST(RunEpisode, Deterministic)
{
  const EpisodeConfig c = config_for("truck", Method::kNlp, urban_prefix(60.0), SlopeProfile::steep());
  const EpisodeResult a = run_episode(c);
  const EpisodeResult b = run_episode(c);
  ASSERT_EQ(a.log.rows.size(), b.log.rows.size());
  for (std::size_t i = 0; i < a.log.rows.size(); ++i) {
    EXPECT_EQ(a.log.rows[i].s, b.log.rows[i].s);
    EXPECT_EQ(a.log.rows[i].v, b.log.rows[i].v);
    EXPECT_EQ(a.log.rows[i].u, b.log.rows[i].u);
    EXPECT_EQ(a.log.rows[i].fuel_cum, b.log.rows[i].fuel_cum);
  }
  EXPECT_EQ(a.metrics.fuel_efficiency, b.metrics.fuel_efficiency);
}

TEST(RunEpisode, StartsAtLeaderSpeedBehindByInitialGap)
{
  const EpisodeConfig c = config_for("sedan", Method::kQp, urban_prefix(30.0), SlopeProfile::flat());
  const EpisodeResult r = run_episode(c);
  ASSERT_FALSE(r.log.rows.empty());
  EXPECT_EQ(r.log.rows[0].v, c.cycle.speed[0]);
  EXPECT_EQ(r.log.rows[0].s, c.cycle.distance[0] - 50.0);
}

TEST(TrajectoryLog, CsvRoundTrip)
{
  const EpisodeConfig c = config_for("sedan", Method::kQp, urban_prefix(20.0), SlopeProfile::rolling());
  const EpisodeResult r = run_episode(c);
  const std::filesystem::path dir = ECOTRAJ_TEST_TMP;
  std::filesystem::create_directories(dir);
  write_log_csv(r.log, dir / "log.csv");
  const TrajectoryLog back = read_log_csv(dir / "log.csv");
  ASSERT_EQ(back.rows.size(), r.log.rows.size());
  for (std::size_t i = 0; i < back.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].s, r.log.rows[i].s);
    EXPECT_EQ(back.rows[i].fuel_cum, r.log.rows[i].fuel_cum);
    EXPECT_EQ(back.rows[i].gap, r.log.rows[i].gap);
  }
}
