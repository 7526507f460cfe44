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

#include "ecotraj/vehicle_model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "ecotraj/csv.hpp"
#include "ecotraj/error.hpp"

namespace ecotraj
{

namespace
{

void require(bool ok, const std::string & what)
{
  if (!ok) {
    throw Error(ErrorCode::kInvalidArgument, what);
  }
}

std::vector<double> geometric_ladder(double first, double last, int count)
{
  std::vector<double> ratios(count);
  const double step = std::pow(last / first, 1.0 / (count - 1));
  for (int i = 0; i < count; ++i) {
    ratios[i] = first * std::pow(step, i);
  }
  return ratios;
}

// Index of the grid cell containing x, clamped to [0, size - 2].
std::size_t cell_index(const std::vector<double> & grid, double x)
{
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const auto upper = static_cast<std::size_t>(std::distance(grid.begin(), it));
  return std::clamp<std::size_t>(upper == 0 ? 0 : upper - 1, 0, grid.size() - 2);
}

bool strictly_increasing(const std::vector<double> & v)
{
  return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
}

}  // namespace

void VehicleParams::validate() const
{
  require(mass > 0.0, "vehicle mass must be positive");
  require(frontal_area > 0.0, "frontal area must be positive");
  require(air_density > 0.0, "air density must be positive");
  require(drag_coeff >= 0.0, "drag coefficient must be non-negative");
  require(rolling_coeff >= 0.0, "rolling coefficient must be non-negative");
  require(gravity > 0.0, "gravity must be positive");
  require(wheel_radius > 0.0, "wheel radius must be positive");
  require(final_drive_ratio > 0.0, "final drive ratio must be positive");
  require(
    transmission_efficiency > 0.0 && transmission_efficiency <= 1.0,
    "transmission efficiency must lie in (0, 1]");
  require(!gear_ratios.empty(), "at least one gear ratio is required");
  for (double ratio : gear_ratios) {
    require(ratio > 0.0, "every gear ratio must be positive");
  }
  require(bounds.v_max > 0.0, "v_max must be positive");
  require(bounds.a_v_max > 0.0, "a_v_max must be positive");
  require(bounds.b_max > 0.0, "b_max must be positive");
  require(bounds.u_max > 0.0, "u_max must be positive");
  require(bounds.jerk_max > 0.0, "jerk_max must be positive");
}

VehicleParams sedan_preset()
{
  VehicleParams p;
  p.name = "Sedan";
  p.mass = 1200.0;
  p.frontal_area = 2.5;
  p.air_density = 1.184;
  p.drag_coeff = 0.32;
  p.rolling_coeff = 0.015;
  p.gravity = 9.81;
  p.wheel_radius = 0.3;
  p.final_drive_ratio = 4.0;
  p.transmission_efficiency = 0.92;
  p.gear_ratios = geometric_ladder(3.5, 0.7, 6);
  p.bounds = {30.0, 2.0, 5.0, 9.0, 1.0};
  return p;
}

VehicleParams truck_preset()
{
  VehicleParams p;
  p.name = "Truck";
  p.mass = 4800.0;
  p.frontal_area = 2.5;
  p.air_density = 1.184;
  p.drag_coeff = 0.6;
  p.rolling_coeff = 0.006;
  p.gravity = 9.81;
  p.wheel_radius = 0.5;
  p.final_drive_ratio = 4.0;
  p.transmission_efficiency = 0.92;
  p.gear_ratios = geometric_ladder(6.0, 0.8, 7);
  p.bounds = {27.0, 2.0, 5.0, 3.0, 1.0};
  return p;
}

VehicleParams vehicle_preset(std::string_view name)
{
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  if (lower == "sedan") {
    return sedan_preset();
  }
  if (lower == "truck") {
    return truck_preset();
  }
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown vehicle preset '{}'", name));
}

VehicleParams load_vehicle_params(const std::filesystem::path & path, const VehicleParams & base)
{
  toml::table root;
  try {
    root = toml::parse_file(path.string());
  } catch (const toml::parse_error & e) {
    throw Error(ErrorCode::kParse, fmt::format("{}: {}", path.string(), e.description()));
  }
  const auto * table = root["vehicle"].as_table();
  if (table == nullptr) {
    throw Error(ErrorCode::kParse, path.string() + ": missing [vehicle] table");
  }
  const toml::node_view<const toml::node> v{table};
  VehicleParams p = base;
  p.name = v["name"].value_or(p.name);
  p.mass = v["mass"].value_or(p.mass);
  p.frontal_area = v["frontal_area"].value_or(p.frontal_area);
  p.air_density = v["air_density"].value_or(p.air_density);
  p.drag_coeff = v["drag_coeff"].value_or(p.drag_coeff);
  p.rolling_coeff = v["rolling_coeff"].value_or(p.rolling_coeff);
  p.gravity = v["gravity"].value_or(p.gravity);
  p.wheel_radius = v["wheel_radius"].value_or(p.wheel_radius);
  p.final_drive_ratio = v["final_drive_ratio"].value_or(p.final_drive_ratio);
  p.transmission_efficiency = v["transmission_efficiency"].value_or(p.transmission_efficiency);
  if (const auto * gears = v["gear_ratios"].as_array()) {
    p.gear_ratios.clear();
    for (const auto & g : *gears) {
      p.gear_ratios.push_back(g.value_or(0.0));
    }
  }
  p.bounds.v_max = v["v_max"].value_or(p.bounds.v_max);
  p.bounds.a_v_max = v["a_v_max"].value_or(p.bounds.a_v_max);
  p.bounds.b_max = v["b_max"].value_or(p.bounds.b_max);
  p.bounds.u_max = v["u_max"].value_or(p.bounds.u_max);
  p.bounds.jerk_max = v["jerk_max"].value_or(p.bounds.jerk_max);
  p.validate();
  return p;
}

DerivedCoeffs derived_coeffs(const VehicleParams & params)
{
  return {
    params.drag_coeff * params.air_density * params.frontal_area / (2.0 * params.mass),
    params.rolling_coeff * params.gravity, params.gravity};
}

double resistance_accel(double v, double theta, const DerivedCoeffs & coeffs)
{
  return coeffs.k1 * v * v + coeffs.k2 * std::cos(theta) + coeffs.k3 * std::sin(theta);
}

double traction_accel(double a_v, double a_r, double a_b) { return a_v + a_r + a_b; }

// ---------------------------------------------------------------------------
// EngineMap

EngineMap::EngineMap(
  std::vector<double> speed_grid, std::vector<double> torque_grid,
  std::vector<double> max_torque_curve, std::vector<double> efficiency, double speed_min,
  double speed_max, double torque_max)
: speed_grid_(std::move(speed_grid)),
  torque_grid_(std::move(torque_grid)),
  max_torque_curve_(std::move(max_torque_curve)),
  efficiency_(std::move(efficiency)),
  speed_min_(speed_min),
  speed_max_(speed_max),
  torque_max_(torque_max)
{
  require(speed_grid_.size() >= 2 && torque_grid_.size() >= 2, "engine map grids need >= 2 points");
  require(strictly_increasing(speed_grid_), "speed grid must be strictly increasing");
  require(strictly_increasing(torque_grid_), "torque grid must be strictly increasing");
  require(
    max_torque_curve_.size() == speed_grid_.size(),
    "torque limit curve must have one value per speed grid point");
  require(
    efficiency_.size() == speed_grid_.size() * torque_grid_.size(),
    "efficiency grid must be torque x speed");
  for (double e : efficiency_) {
    require(std::isfinite(e) && e > 0.0, "efficiency values must be positive");
  }
  require(
    speed_min_ < speed_max_ && speed_min_ >= speed_grid_.front() &&
      speed_max_ <= speed_grid_.back(),
    "speed bounds must lie within the speed grid");
  require(
    torque_max_ > 0.0 && torque_max_ <= torque_grid_.back() && torque_grid_.front() <= 0.0,
    "torque bounds must lie within the torque grid");
  power_nodes_.resize(efficiency_.size());
  for (std::size_t t = 0; t < torque_grid_.size(); ++t) {
    for (std::size_t w = 0; w < speed_grid_.size(); ++w) {
      power_nodes_[t * speed_grid_.size() + w] = speed_grid_[w] * torque_grid_[t];
    }
  }
}

double EngineMap::efficiency_at_node(std::size_t torque_index, std::size_t speed_index) const
{
  return efficiency_.at(torque_index * speed_grid_.size() + speed_index);
}

double EngineMap::max_torque(double omega) const
{
  const auto i = cell_index(speed_grid_, omega);
  const double w = std::clamp(
    (omega - speed_grid_[i]) / (speed_grid_[i + 1] - speed_grid_[i]), 0.0, 1.0);
  const double limit = (1.0 - w) * max_torque_curve_[i] + w * max_torque_curve_[i + 1];
  return std::min(limit, torque_max_);
}

double EngineMap::bilinear(const std::vector<double> & nodes, double omega, double torque) const
{
  const auto i = cell_index(speed_grid_, omega);
  const auto j = cell_index(torque_grid_, torque);
  const double wx = (omega - speed_grid_[i]) / (speed_grid_[i + 1] - speed_grid_[i]);
  const double wy = (torque - torque_grid_[j]) / (torque_grid_[j + 1] - torque_grid_[j]);
  const std::size_t n = speed_grid_.size();
  const double f00 = nodes[j * n + i];
  const double f10 = nodes[j * n + i + 1];
  const double f01 = nodes[(j + 1) * n + i];
  const double f11 = nodes[(j + 1) * n + i + 1];
  return (1.0 - wy) * ((1.0 - wx) * f00 + wx * f10) + wy * ((1.0 - wx) * f01 + wx * f11);
}

double EngineMap::power(double omega, double torque) const
{
  return bilinear(power_nodes_, omega, torque);
}

double EngineMap::efficiency(double omega, double torque) const
{
  return bilinear(efficiency_, omega, torque);
}

EngineMap EngineMap::load_csv(
  const std::filesystem::path & efficiency_csv, const std::filesystem::path & torque_limit_csv,
  double speed_min, double speed_max, double torque_max)
{
  const auto eff = csv::read(efficiency_csv);
  if (eff.header.size() < 3 || eff.header.front() != "omega_rad_s") {
    throw Error(
      ErrorCode::kParse, efficiency_csv.string() + ": header must be 'omega_rad_s,<w1>,<w2>,...'");
  }
  std::vector<double> speeds;
  for (std::size_t i = 1; i < eff.header.size(); ++i) {
    speeds.push_back(csv::to_double(eff.header[i], efficiency_csv.string()));
  }
  std::vector<double> torques;
  std::vector<double> grid;
  for (const auto & row : eff.rows) {
    if (row.size() != eff.header.size()) {
      throw Error(
        ErrorCode::kParse, fmt::format(
                             "{}: row with torque '{}' has {} cells, expected {}",
                             efficiency_csv.string(), row.front(), row.size(), eff.header.size()));
    }
    torques.push_back(csv::to_double(row[0], efficiency_csv.string()));
    for (std::size_t i = 1; i < row.size(); ++i) {
      grid.push_back(csv::to_double(row[i], efficiency_csv.string()));
    }
  }

  const auto limit = csv::read(torque_limit_csv);
  if (limit.header.size() != 2 || limit.header[0] != "omega_rad_s" ||
      limit.header[1] != "max_torque_nm") {
    throw Error(
      ErrorCode::kParse, torque_limit_csv.string() + ": header must be 'omega_rad_s,max_torque_nm'");
  }
  std::vector<double> curve_speed;
  std::vector<double> curve_torque;
  for (const auto & row : limit.rows) {
    if (row.size() != 2) {
      throw Error(ErrorCode::kParse, torque_limit_csv.string() + ": expected two columns");
    }
    curve_speed.push_back(csv::to_double(row[0], torque_limit_csv.string()));
    curve_torque.push_back(csv::to_double(row[1], torque_limit_csv.string()));
  }
  if (curve_speed.size() < 2 || !strictly_increasing(curve_speed)) {
    throw Error(
      ErrorCode::kParse, torque_limit_csv.string() + ": speeds must be strictly increasing");
  }
  // Resample the limit curve onto the map speed grid.
  std::vector<double> curve(speeds.size());
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    const auto k = cell_index(curve_speed, speeds[i]);
    const double w = std::clamp(
      (speeds[i] - curve_speed[k]) / (curve_speed[k + 1] - curve_speed[k]), 0.0, 1.0);
    curve[i] = (1.0 - w) * curve_torque[k] + w * curve_torque[k + 1];
  }
  return EngineMap(
    std::move(speeds), std::move(torques), std::move(curve), std::move(grid), speed_min, speed_max,
    torque_max);
}

void EngineMap::save_csv(
  const std::filesystem::path & efficiency_csv,
  const std::filesystem::path & torque_limit_csv) const
{
  std::ofstream eff(efficiency_csv);
  std::ofstream lim(torque_limit_csv);
  if (!eff || !lim) {
    throw Error(ErrorCode::kIo, "cannot write engine map to " + efficiency_csv.string());
  }
  eff << "omega_rad_s";
  for (double w : speed_grid_) {
    eff << ',' << csv::format(w);
  }
  eff << '\n';
  for (std::size_t t = 0; t < torque_grid_.size(); ++t) {
    eff << csv::format(torque_grid_[t]);
    for (std::size_t w = 0; w < speed_grid_.size(); ++w) {
      eff << ',' << csv::format(efficiency_at_node(t, w));
    }
    eff << '\n';
  }
  lim << "omega_rad_s,max_torque_nm\n";
  for (std::size_t w = 0; w < speed_grid_.size(); ++w) {
    lim << csv::format(speed_grid_[w]) << ',' << csv::format(max_torque_curve_[w]) << '\n';
  }
}

EngineMap synthetic_truck_map()
{
  constexpr double kSpeedMin = 62.0;
  constexpr double kSpeedMax = 630.0;
  constexpr double kTorqueMax = 724.0;
  constexpr int kSpeedPoints = 25;
  constexpr int kTorquePoints = 21;

  std::vector<double> speeds(kSpeedPoints);
  for (int i = 0; i < kSpeedPoints; ++i) {
    speeds[i] = kSpeedMin + (kSpeedMax - kSpeedMin) * i / (kSpeedPoints - 1);
  }
  std::vector<double> torques(kTorquePoints);
  for (int j = 0; j < kTorquePoints; ++j) {
    torques[j] = kTorqueMax * j / (kTorquePoints - 1);
  }
  std::vector<double> curve(kSpeedPoints);
  for (int i = 0; i < kSpeedPoints; ++i) {
    const double w = speeds[i];
    if (w < 120.0) {
      curve[i] = 450.0 + (kTorqueMax - 450.0) * (w - kSpeedMin) / (120.0 - kSpeedMin);
    } else if (w <= 280.0) {
      curve[i] = kTorqueMax;
    } else {
      curve[i] = kTorqueMax - (kTorqueMax - 480.0) * (w - 280.0) / (kSpeedMax - 280.0);
    }
  }

  // Willans line: fuel mass flow = friction term proportional to speed + marginal BSFC * power.
  // The marginal BSFC has a shallow island centred near 170 rad/s and 75 % load.
  constexpr double kFrictionFuel = 8.0;  // g/h per rad/s
  std::vector<double> grid(kSpeedPoints * kTorquePoints);
  for (int j = 0; j < kTorquePoints; ++j) {
    // Nodes at zero load use the 5 % load value; power is zero there so the fuel rate is too.
    const double torque = std::max(torques[j], 0.05 * kTorqueMax);
    for (int i = 0; i < kSpeedPoints; ++i) {
      const double w = speeds[i];
      const double load = torque / kTorqueMax;
      const double marginal =
        192.0 * (1.0 + 0.06 * std::pow((w - 170.0) / 300.0, 2) + 0.04 * std::pow(load - 0.75, 2));
      const double power_kw = w * torque / 1000.0;
      grid[j * kSpeedPoints + i] = (kFrictionFuel * w + marginal * power_kw) / power_kw;
    }
  }
  return EngineMap(
    std::move(speeds), std::move(torques), std::move(curve), std::move(grid), kSpeedMin, kSpeedMax,
    kTorqueMax);
}

// ---------------------------------------------------------------------------

EngineState engine_state(
  double v, double u, int gear_index, const VehicleParams & params, const EngineMap & map)
{
  if (gear_index < 1 || gear_index > static_cast<int>(params.gear_ratios.size())) {
    throw Error(
      ErrorCode::kInvalidArgument,
      fmt::format("gear index {} outside [1, {}]", gear_index, params.gear_ratios.size()));
  }
  EngineState state;
  state.gear_index = gear_index;
  const double traction_force = u * params.mass;
  const double wheel_torque = traction_force * params.wheel_radius;
  const double ratio = params.gear_ratios[gear_index - 1] * params.final_drive_ratio;
  state.engine_torque = wheel_torque / (ratio * params.transmission_efficiency);
  state.engine_speed = v * ratio / params.wheel_radius;

  if (state.engine_speed < map.speed_min()) {
    state.violation = fmt::format(
      "engine speed {:.4g} rad/s below idle bound {:.4g}", state.engine_speed, map.speed_min());
  } else if (state.engine_speed > map.speed_max()) {
    state.violation = fmt::format(
      "engine speed {:.4g} rad/s above bound {:.4g}", state.engine_speed, map.speed_max());
  } else if (state.engine_torque < 0.0) {
    state.violation =
      fmt::format("engine torque {:.4g} N m below bound 0", state.engine_torque);
  } else if (state.engine_torque > map.max_torque(state.engine_speed)) {
    state.violation = fmt::format(
      "engine torque {:.4g} N m above limit {:.4g}", state.engine_torque,
      map.max_torque(state.engine_speed));
  }
  state.feasible = state.violation.empty();
  if (state.feasible) {
    state.power = map.power(state.engine_speed, state.engine_torque);
    state.efficiency = map.efficiency(state.engine_speed, state.engine_torque);
  } else {
    state.power = state.engine_speed * state.engine_torque;
  }
  return state;
}

double map_fuel_rate(const EngineState & state, const EngineMap & map)
{
  double omega = state.engine_speed;
  double torque = state.engine_torque;
  if (omega == 0.0) {
    omega = map.speed_min();
    torque = 0.0;
  }
  if (omega < map.speed_min()) {
    throw Error(
      ErrorCode::kOutOfBounds,
      fmt::format("engine speed {:.6g} rad/s below idle bound {:.6g}", omega, map.speed_min()));
  }
  if (omega > map.speed_max()) {
    throw Error(
      ErrorCode::kOutOfBounds,
      fmt::format("engine speed {:.6g} rad/s above bound {:.6g}", omega, map.speed_max()));
  }
  if (torque < 0.0) {
    throw Error(
      ErrorCode::kOutOfBounds, fmt::format("engine torque {:.6g} N m below bound 0", torque));
  }
  torque = std::min(torque, map.max_torque(omega));
  return fuel_rate_from_power(map.power(omega, torque), map.efficiency(omega, torque));
}

double fuel_rate_from_power(double power_w, double bsfc_g_kwh)
{
  return power_w * bsfc_g_kwh / (kFuelDensity * 1000.0 * 3600.0);
}

}  // namespace ecotraj
