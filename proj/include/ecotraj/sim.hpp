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

#ifndef ECOTRAJ__SIM_HPP_
#define ECOTRAJ__SIM_HPP_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecotraj/environment.hpp"
#include "ecotraj/fuel_model.hpp"
#include "ecotraj/ocp.hpp"
#include "ecotraj/solvers.hpp"
#include "ecotraj/vehicle_model.hpp"

namespace ecotraj
{

enum class MeteringMode { kFitted, kEngineMap };

std::string_view to_string(MeteringMode mode);
MeteringMode metering_from_string(std::string_view text);

/// Per-method overrides of the default objective weights and gap limits.
struct MethodTuning
{
  std::optional<Weights> weights;
  std::optional<double> d_min;
  std::optional<double> d_max;
  bool operator==(const MethodTuning &) const = default;
};

struct EpisodeConfig
{
  VehicleParams vehicle = truck_preset();
  FuelCoefficients fuel = truck_fuel_preset();
  Method method = Method::kQp;
  double horizon_s = 5.0;
  double dt = 0.1;
  SlopeProfile road = SlopeProfile::flat();
  DrivingCycle cycle;  // sampled at dt
  int cycle_repeat = 1;
  bool use_slope_prediction = true;
  double d_init = 50.0;
  double time_headway = 1.5;
  MethodTuning tuning;
  SolverConfig solver;
  /// Initialize each solve from the previous plan shifted by one step.
  bool warm_start = true;
  MeteringMode metering = MeteringMode::kFitted;
  std::shared_ptr<const EngineMap> engine_map;  // required for kEngineMap
  bool record_log = true;

  void validate() const;
  HorizonSpec horizon_spec() const;
  /// e.g. "Truck-NLP-5" or "Truck-NLP-5F" when slope prediction is off.
  std::string agent_name() const;
};

/// "Truck-L" style name of the leading agent.
std::string leader_name(const VehicleParams & vehicle);

/// One row per time node: state at t and the control applied over [t, t + dt].
struct LogRow
{
  double t = 0.0;
  double s = 0.0;
  double v = 0.0;
  double u = 0.0;
  double a_v = 0.0;
  double a_b = 0.0;
  double theta = 0.0;
  double gap = 0.0;
  double fuel_cum = 0.0;  // fuel used before t
  double solve_ms = 0.0;
};

struct TrajectoryLog
{
  double dt = 0.1;
  std::vector<LogRow> rows;
};

void write_log_csv(const TrajectoryLog & log, const std::filesystem::path & path);
TrajectoryLog read_log_csv(const std::filesystem::path & path);

/// Raw sums from which every metric is derived.
struct RunTotals
{
  double travel_time = 0.0;       // s
  double travel_distance = 0.0;   // m
  double fuel_consumption = 0.0;  // ml
  double solve_time_sum = 0.0;    // ms
  long solve_count = 0;
  long constraint_violations = 0;
  long episodes = 0;
  long completed_episodes = 0;

  RunTotals & operator+=(const RunTotals & other);
};

struct EpisodeMetrics
{
  double travel_time = 0.0;
  double travel_distance = 0.0;
  double fuel_consumption = 0.0;
  double average_fuel_rate = 0.0;                  // ml/s
  double fuel_efficiency = 0.0;                    // L/100km
  double average_speed = 0.0;                      // m/s
  double efficiency_improvement_vs_leading = 0.0;  // %
  double average_solve_time = 0.0;                 // ms
  long constraint_violation_count = 0;
  bool completed = true;
};

/// Derives rates from sums. Throws Error(kUndefinedMetric) for zero distance or time.
EpisodeMetrics compute_metrics(const RunTotals & totals, const RunTotals * leader = nullptr);
/// Totals read back from a trajectory log (time span, distance, final fuel, solve times).
RunTotals totals_from_log(const TrajectoryLog & log, double d_min, double d_max);
EpisodeMetrics compute_metrics(const TrajectoryLog & log, double d_min, double d_max);

nlohmann::json to_json(const EpisodeMetrics & m);

/// Control taken from a plan: apparent acceleration for the linear formulation, traction
/// and brake otherwise.
struct ControlCommand
{
  bool from_traction = false;
  double a_v = 0.0;
  double u = 0.0;
  double b = 0.0;
};

ControlCommand command_from_solution(const HorizonSolution & solution, Method method);

/// Applies a command for one step at the actual slope: jerk limit, actuator limits,
/// non-negative speed, then exact double-integrator update. The returned state carries
/// the applied (u, a_v, a_b), which always satisfy u = a_v + a_R + a_b.
EgoState execute_control(
  const EgoState & x, const ControlCommand & cmd, double theta_now, double dt,
  const VehicleParams & params);

EgoState execute_control(
  const EgoState & x, const HorizonSolution & solution, Method method, double theta_now,
  double dt, const VehicleParams & params);

/// max(f(v, u), f(0, 0)) * dt.
double meter_fuel(double v, double u, const FuelCoefficients & fuel, double dt);

/// Traction of the leading agent: max(0, a + a_R(v, theta)).
double leader_traction(double a, double v, double theta, const DerivedCoeffs & coeffs);

struct EpisodeResult
{
  std::string agent;
  EpisodeMetrics metrics;
  RunTotals totals;
  RunTotals leader_totals;         // full cycle
  RunTotals leader_window_totals;  // same time span as the ego run
  TrajectoryLog log;
  TrajectoryLog leader_log;
  int failed_step = -1;
  std::string failure;             // solver status at the failed step
  std::string failure_row;         // constraint named by the solver, if any
  int engine_map_fallbacks = 0;
  double min_plan_fuel_rate = kInf;
};

/// Receding-horizon loop over the cycle: predict, solve, execute the first control,
/// meter fuel for ego and leader. A solver failure ends the episode early.
EpisodeResult run_episode(const EpisodeConfig & config);

}  // namespace ecotraj

#endif  // ECOTRAJ__SIM_HPP_
