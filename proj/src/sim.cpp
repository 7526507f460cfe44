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

#include "ecotraj/sim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "ecotraj/csv.hpp"
#include "ecotraj/error.hpp"

namespace ecotraj
{

namespace
{

constexpr double kSafetyTolerance = 1e-3;

std::string capitalized(std::string_view text)
{
  std::string out(text);
  if (!out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

std::string uppercase(std::string_view text)
{
  std::string out(text);
  for (char & c : out) {
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

bool gap_violated(double gap, double d_min, double d_max)
{
  return !(gap > d_min - kSafetyTolerance && gap < d_max + kSafetyTolerance);
}

/// Best-gear map fuel rate; empty when no gear can deliver the traction.
std::optional<double> map_metered_rate(
  double v, double u, const VehicleParams & params, const EngineMap & map)
{
  if (u <= 0.0) {
    return 0.0;
  }
  std::optional<double> best;
  for (std::size_t g = 1; g <= params.gear_ratios.size(); ++g) {
    const EngineState st = engine_state(v, u, static_cast<int>(g), params, map);
    if (!st.feasible) {
      continue;
    }
    const double rate = map_fuel_rate(st, map);
    if (!best || rate < *best) {
      best = rate;
    }
  }
  return best;
}

}  // namespace

std::string_view to_string(MeteringMode mode)
{
  return mode == MeteringMode::kFitted ? "fitted" : "engine_map";
}

MeteringMode metering_from_string(std::string_view text)
{
  if (text == "fitted") {
    return MeteringMode::kFitted;
  }
  if (text == "engine_map") {
    return MeteringMode::kEngineMap;
  }
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown metering mode '{}'", text));
}

void EpisodeConfig::validate() const
{
  vehicle.validate();
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dt must be positive");
  }
  if (!(horizon_s >= dt)) {
    throw Error(ErrorCode::kInvalidArgument, "horizon must cover at least one step");
  }
  if (cycle.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "driving cycle needs at least two samples");
  }
  if (std::abs(cycle.timestep - dt) > 1e-12) {
    throw Error(
      ErrorCode::kInvalidArgument,
      fmt::format("cycle '{}' is sampled at {} s, expected {} s", cycle.name, cycle.timestep, dt));
  }
  if (cycle_repeat < 1) {
    throw Error(ErrorCode::kInvalidArgument, "cycle repeat count must be at least 1");
  }
  if (!(d_init > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "d_init must be positive");
  }
  if (metering == MeteringMode::kEngineMap && !engine_map) {
    throw Error(ErrorCode::kInvalidArgument, "engine-map metering needs an engine map");
  }
  road.validate();
  solver.validate();
  horizon_spec().validate();
}

HorizonSpec EpisodeConfig::horizon_spec() const
{
  HorizonSpec spec = HorizonSpec::for_method(method, vehicle, horizon_s, dt);
  spec.time_headway = time_headway;
  spec.d_init = d_init;
  spec.use_slope_prediction = use_slope_prediction;
  if (tuning.weights) {
    spec.weights = *tuning.weights;
  }
  if (tuning.d_min) {
    spec.d_min = *tuning.d_min;
  }
  if (tuning.d_max) {
    spec.d_max = *tuning.d_max;
  }
  return spec;
}

std::string EpisodeConfig::agent_name() const
{
  return fmt::format(
    "{}-{}-{}{}", capitalized(vehicle.name), uppercase(to_string(method)), horizon_s,
    use_slope_prediction ? "" : "F");
}

std::string leader_name(const VehicleParams & vehicle)
{
  return fmt::format("{}-L", capitalized(vehicle.name));
}

void write_log_csv(const TrajectoryLog & log, const std::filesystem::path & path)
{
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  }
  out << "t,s,v,u,a_v,a_b,theta,gap,fuel_cum,solve_ms\n";
  for (const auto & r : log.rows) {
    out << fmt::format(
      "{},{},{},{},{},{},{},{},{},{}\n", csv::format(r.t), csv::format(r.s), csv::format(r.v),
      csv::format(r.u), csv::format(r.a_v), csv::format(r.a_b), csv::format(r.theta),
      csv::format(r.gap), csv::format(r.fuel_cum), csv::format(r.solve_ms));
  }
}

TrajectoryLog read_log_csv(const std::filesystem::path & path)
{
  const csv::Table table = csv::read(path);
  const std::vector<std::string> expected{"t", "s", "v", "u", "a_v", "a_b",
                                          "theta", "gap", "fuel_cum", "solve_ms"};
  if (table.header != expected) {
    throw Error(ErrorCode::kParse, fmt::format("{}: unexpected trajectory log header", path.string()));
  }
  TrajectoryLog log;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto & f = table.rows[i];
    if (f.size() != expected.size()) {
      throw Error(ErrorCode::kParse, fmt::format("{}: row {} has {} fields", path.string(), i + 2, f.size()));
    }
    const std::string ctx = fmt::format("{} row {}", path.string(), i + 2);
    LogRow r;
    r.t = csv::to_double(f[0], ctx);
    r.s = csv::to_double(f[1], ctx);
    r.v = csv::to_double(f[2], ctx);
    r.u = csv::to_double(f[3], ctx);
    r.a_v = csv::to_double(f[4], ctx);
    r.a_b = csv::to_double(f[5], ctx);
    r.theta = csv::to_double(f[6], ctx);
    r.gap = csv::to_double(f[7], ctx);
    r.fuel_cum = csv::to_double(f[8], ctx);
    r.solve_ms = csv::to_double(f[9], ctx);
    log.rows.push_back(r);
  }
  if (log.rows.size() >= 2) {
    log.dt = log.rows[1].t - log.rows[0].t;
  }
  return log;
}

RunTotals & RunTotals::operator+=(const RunTotals & o)
{
  travel_time += o.travel_time;
  travel_distance += o.travel_distance;
  fuel_consumption += o.fuel_consumption;
  solve_time_sum += o.solve_time_sum;
  solve_count += o.solve_count;
  constraint_violations += o.constraint_violations;
  episodes += o.episodes;
  completed_episodes += o.completed_episodes;
  return *this;
}

EpisodeMetrics compute_metrics(const RunTotals & totals, const RunTotals * leader)
{
  if (!(totals.travel_distance > 0.0)) {
    throw Error(ErrorCode::kUndefinedMetric, "fuel efficiency undefined for zero travel distance");
  }
  if (!(totals.travel_time > 0.0)) {
    throw Error(ErrorCode::kUndefinedMetric, "average speed undefined for zero travel time");
  }
  EpisodeMetrics m;
  m.travel_time = totals.travel_time;
  m.travel_distance = totals.travel_distance;
  m.fuel_consumption = totals.fuel_consumption;
  m.average_fuel_rate = totals.fuel_consumption / totals.travel_time;
  m.fuel_efficiency = totals.fuel_consumption * 100.0 / totals.travel_distance;
  m.average_speed = totals.travel_distance / totals.travel_time;
  m.average_solve_time =
    totals.solve_count > 0 ? totals.solve_time_sum / static_cast<double>(totals.solve_count) : 0.0;
  m.constraint_violation_count = totals.constraint_violations;
  m.completed = totals.completed_episodes == totals.episodes;
  if (leader != nullptr) {
    const EpisodeMetrics l = compute_metrics(*leader);
    m.efficiency_improvement_vs_leading =
      (l.fuel_efficiency - m.fuel_efficiency) / l.fuel_efficiency * 100.0;
  }
  return m;
}

RunTotals totals_from_log(const TrajectoryLog & log, double d_min, double d_max)
{
  if (log.rows.empty()) {
    throw Error(ErrorCode::kUndefinedMetric, "empty trajectory log");
  }
  const LogRow & first = log.rows.front();
  const LogRow & last = log.rows.back();
  RunTotals t;
  t.travel_time = last.t - first.t;
  t.travel_distance = last.s - first.s;
  t.fuel_consumption = last.fuel_cum - first.fuel_cum;
  for (std::size_t i = 0; i + 1 < log.rows.size(); ++i) {
    t.solve_time_sum += log.rows[i].solve_ms;
    ++t.solve_count;
  }
  for (const auto & r : log.rows) {
    if (gap_violated(r.gap, d_min, d_max)) {
      ++t.constraint_violations;
    }
  }
  t.episodes = 1;
  t.completed_episodes = 1;
  return t;
}

EpisodeMetrics compute_metrics(const TrajectoryLog & log, double d_min, double d_max)
{
  return compute_metrics(totals_from_log(log, d_min, d_max));
}

nlohmann::json to_json(const EpisodeMetrics & m)
{
  return {
    {"travel_time", m.travel_time},
    {"travel_distance", m.travel_distance},
    {"fuel_consumption", m.fuel_consumption},
    {"average_fuel_rate", m.average_fuel_rate},
    {"fuel_efficiency", m.fuel_efficiency},
    {"average_speed", m.average_speed},
    {"efficiency_improvement_vs_leading", m.efficiency_improvement_vs_leading},
    {"average_solve_time", m.average_solve_time},
    {"constraint_violation_count", m.constraint_violation_count},
    {"completed", m.completed}};
}

ControlCommand command_from_solution(const HorizonSolution & solution, Method method)
{
  ControlCommand cmd;
  if (method == Method::kQp) {
    cmd.a_v = solution.traj.a.at(0);
  } else {
    cmd.from_traction = true;
    cmd.u = solution.traj.u.at(0);
    cmd.b = solution.traj.b.at(0);
  }
  return cmd;
}

EgoState execute_control(
  const EgoState & x, const ControlCommand & cmd, double theta_now, double dt,
  const VehicleParams & params)
{
  const VehicleBounds & bd = params.bounds;
  const double a_r = resistance_accel(x.v, theta_now, derived_coeffs(params));
  // Solver iterates may sit a hair outside the actuator box.
  const double cmd_u = std::clamp(cmd.u, 0.0, bd.u_max);
  const double cmd_b = std::clamp(cmd.b, 0.0, bd.b_max);
  const double requested = cmd.from_traction ? cmd_u - a_r - cmd_b : cmd.a_v;
  const double step = bd.jerk_max * dt;
  double a = std::clamp(requested, x.a_v - step, x.a_v + step);

  double u = 0.0;
  double b = 0.0;
  if (cmd.from_traction && a == requested) {
    u = cmd_u;
    b = cmd_b;
  } else {
    // Re-split the demand within the actuator limits.
    const double demand = a + a_r;
    u = std::clamp(demand, 0.0, bd.u_max);
    b = std::clamp(u - demand, 0.0, bd.b_max);
    a = u - a_r - b;
  }

  EgoState next;
  if (x.v + a * dt < 0.0) {
    // Stop exactly at the end of the step; the holding brake may exceed b_max.
    a = -x.v / dt;
    const double demand = a + a_r;
    u = std::clamp(demand, 0.0, bd.u_max);
    b = std::max(0.0, u - demand);
    a = u - a_r - b;
    next.v = 0.0;
    next.s = x.s + 0.5 * x.v * dt;
  } else {
    next.v = x.v + a * dt;
    next.s = x.s + x.v * dt + 0.5 * a * dt * dt;
  }
  next.u = u;
  next.a_v = a;
  next.a_b = b;
  return next;
}

EgoState execute_control(
  const EgoState & x, const HorizonSolution & solution, Method method, double theta_now,
  double dt, const VehicleParams & params)
{
  return execute_control(x, command_from_solution(solution, method), theta_now, dt, params);
}

double meter_fuel(double v, double u, const FuelCoefficients & fuel, double dt)
{
  return std::max(fuel_rate_hat(v, u, fuel), fuel_rate_hat(0.0, 0.0, fuel)) * dt;
}

double leader_traction(double a, double v, double theta, const DerivedCoeffs & coeffs)
{
  return std::max(0.0, a + resistance_accel(v, theta, coeffs));
}

namespace
{

Trajectory shifted_guess(const Trajectory & prev, const EgoState & x, double dt)
{
  Trajectory g = prev;
  const std::size_t n = prev.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    g.s[i] = prev.s[i + 1];
    g.v[i] = prev.v[i + 1];
    g.a[i] = prev.a[i + 1];
    if (!prev.u.empty()) {
      g.u[i] = prev.u[i + 1];
      g.b[i] = prev.b[i + 1];
    }
  }
  g.s[n - 1] = prev.s[n - 1] + prev.v[n - 1] * dt;
  g.s[0] = x.s;
  g.v[0] = x.v;
  return g;
}

}  // namespace

EpisodeResult run_episode(const EpisodeConfig & config)
{
  config.validate();
  const DrivingCycle cycle = repeat_cycle(config.cycle, config.cycle_repeat);
  const HorizonSpec spec = config.horizon_spec();
  const DerivedCoeffs coeffs = derived_coeffs(config.vehicle);
  const double dt = config.dt;
  const int samples = static_cast<int>(cycle.size());
  const int steps = samples - 1;

  auto meter = [&](double v, double u, EpisodeResult & res) {
    if (config.metering == MeteringMode::kEngineMap) {
      const auto rate = map_metered_rate(v, u, config.vehicle, *config.engine_map);
      if (rate) {
        return std::max(*rate, fuel_rate_hat(0.0, 0.0, config.fuel)) * dt;
      }
      ++res.engine_map_fallbacks;
    }
    return meter_fuel(v, u, config.fuel, dt);
  };

  EpisodeResult res;
  res.agent = config.agent_name();
  res.log.dt = dt;
  res.leader_log.dt = dt;

  // Leading agent over the whole cycle.
  std::vector<double> leader_fuel(samples, 0.0);
  for (int k = 0; k < samples; ++k) {
    const double s = cycle.distance[k];
    const double v = cycle.speed[k];
    const double a = k < steps ? cycle.acceleration[k] : 0.0;
    const double theta = slope_at(s, config.road);
    const double u = leader_traction(a, v, theta, coeffs);
    if (config.record_log) {
      res.leader_log.rows.push_back(
        {k * dt, s, v, u, a, u - a - resistance_accel(v, theta, coeffs), theta, 0.0,
         leader_fuel[k], 0.0});
    }
    if (k < steps) {
      leader_fuel[k + 1] = leader_fuel[k] + meter(cycle.speed[k + 1], u, res);
    }
  }
  res.leader_totals.travel_time = steps * dt;
  res.leader_totals.travel_distance = cycle.distance[steps] - cycle.distance[0];
  res.leader_totals.fuel_consumption = leader_fuel[steps];
  res.leader_totals.episodes = 1;
  res.leader_totals.completed_episodes = 1;

  EgoState x;
  x.s = cycle.distance[0] - config.d_init;
  x.v = cycle.speed[0];
  double fuel = 0.0;
  RunTotals& tot = res.totals;
  tot.episodes = 1;
  std::optional<Trajectory> previous_plan;
  int executed = 0;

  for (int k = 0; k < steps; ++k) {
    const LeadState lead{cycle.distance[k], cycle.speed[k], cycle.acceleration[k]};
    const LeadPrediction pred = predict_leading(lead, spec.steps, dt);

    HorizonProblem problem;
    if (config.method == Method::kQp) {
      problem = build_qp(x, pred.s, pred.v, spec);
    } else {
      std::vector<double> slope;
      if (!spec.use_slope_prediction) {
        slope = current_slope_sequence(x.s, spec.steps, config.road);
      } else if (!previous_plan) {
        slope = predict_slope_sequence(initial_slope_reference(pred.s, config.d_init), config.road);
      } else {
        slope = predict_slope_sequence(shifted_slope_reference(previous_plan->s), config.road);
      }
      problem = build_nlp(x, pred.s, pred.v, slope, coeffs, config.fuel, spec);
    }

    std::optional<Trajectory> guess;
    if (config.warm_start && previous_plan && config.method != Method::kQp) {
      guess = shifted_guess(*previous_plan, x, dt);
    }
    HorizonSolution sol;
    switch (config.method) {
      case Method::kQp:
        sol = solve_qp(problem, config.solver);
        break;
      case Method::kSqp:
        sol = solve_sqp(problem, config.solver, guess ? &*guess : nullptr);
        break;
      case Method::kNlp:
        sol = solve_nlp(problem, config.solver, guess ? &*guess : nullptr);
        break;
    }
    if (!sol.usable()) {
      res.failed_step = k;
      res.failure = std::string(to_string(sol.status));
      res.failure_row = sol.diag.infeasible_row.empty() ? sol.diag.residuals.worst
                                                        : sol.diag.infeasible_row;
      break;
    }
    if (config.method != Method::kQp) {
      res.min_plan_fuel_rate = std::min(res.min_plan_fuel_rate, sol.diag.residuals.min_fuel_rate);
    }

    const double theta = slope_at(x.s, config.road);
    const EgoState next = execute_control(x, sol, config.method, theta, dt, config.vehicle);
    const double gap = acc_gap(cycle.distance[k], x.s, x.v, spec.time_headway);
    if (gap_violated(gap, spec.d_min, spec.d_max)) {
      ++tot.constraint_violations;
    }
    if (config.record_log) {
      res.log.rows.push_back(
        {k * dt, x.s, x.v, next.u, next.a_v, next.a_b, theta, gap, fuel, sol.diag.solve_ms});
    }
    tot.solve_time_sum += sol.diag.solve_ms;
    ++tot.solve_count;
    fuel += meter(next.v, next.u, res);
    x = next;
    previous_plan = std::move(sol.traj);
    executed = k + 1;
  }

  const double final_gap = acc_gap(cycle.distance[executed], x.s, x.v, spec.time_headway);
  if (gap_violated(final_gap, spec.d_min, spec.d_max)) {
    ++tot.constraint_violations;
  }
  if (config.record_log) {
    res.log.rows.push_back(
      {executed * dt, x.s, x.v, 0.0, 0.0, 0.0, slope_at(x.s, config.road), final_gap, fuel, 0.0});
  }
  tot.travel_time = executed * dt;
  tot.travel_distance = x.s - (cycle.distance[0] - config.d_init);
  tot.fuel_consumption = fuel;
  tot.completed_episodes = res.failed_step < 0 ? 1 : 0;

  res.leader_window_totals = res.leader_totals;
  res.leader_window_totals.travel_time = executed * dt;
  res.leader_window_totals.travel_distance = cycle.distance[executed] - cycle.distance[0];
  res.leader_window_totals.fuel_consumption = leader_fuel[executed];

  if (executed > 0 && tot.travel_distance > 0.0 && res.leader_window_totals.travel_distance > 0.0) {
    res.metrics = compute_metrics(tot, &res.leader_window_totals);
  } else {
    res.metrics.travel_time = tot.travel_time;
    res.metrics.travel_distance = tot.travel_distance;
    res.metrics.fuel_consumption = tot.fuel_consumption;
    res.metrics.constraint_violation_count = tot.constraint_violations;
  }
  res.metrics.completed = res.failed_step < 0;
  return res;
}

}  // namespace ecotraj
