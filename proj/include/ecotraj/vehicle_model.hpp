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

#ifndef ECOTRAJ__VEHICLE_MODEL_HPP_
#define ECOTRAJ__VEHICLE_MODEL_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ecotraj
{

/// Actuator and state limits used by the planners.
struct VehicleBounds
{
  double v_max = 30.0;     // m/s
  double a_v_max = 2.0;    // m/s^2, apparent acceleration
  double b_max = 5.0;      // m/s^2, brake magnitude
  double u_max = 9.0;      // m/s^2, traction acceleration
  double jerk_max = 1.0;   // m/s^3, enforced at execution only
};

/// Longitudinal vehicle constants. Brake acceleration is a non-negative magnitude.
struct VehicleParams
{
  std::string name;
  double mass = 0.0;                     // kg
  double frontal_area = 0.0;             // m^2
  double air_density = 0.0;              // kg/m^3
  double drag_coeff = 0.0;
  double rolling_coeff = 0.0;
  double gravity = 9.81;                 // m/s^2
  double wheel_radius = 0.0;             // m
  double final_drive_ratio = 0.0;
  double transmission_efficiency = 0.0;
  std::vector<double> gear_ratios;       // first gear first
  VehicleBounds bounds;

  /// Throws Error(kInvalidArgument) naming the first violated invariant.
  void validate() const;
};

VehicleParams sedan_preset();
VehicleParams truck_preset();
/// "sedan" or "truck" (case-insensitive).
VehicleParams vehicle_preset(std::string_view name);
/// Loads a `[vehicle]` table from a TOML file; unspecified keys fall back to `base`.
VehicleParams load_vehicle_params(const std::filesystem::path & path, const VehicleParams & base);

struct DerivedCoeffs
{
  double k1 = 0.0;  // 1/m, aerodynamic
  double k2 = 0.0;  // m/s^2, rolling
  double k3 = 0.0;  // m/s^2, grade
};

DerivedCoeffs derived_coeffs(const VehicleParams & params);

/// a_R = k1 v^2 + k2 cos(theta) + k3 sin(theta).
double resistance_accel(double v, double theta, const DerivedCoeffs & coeffs);

/// u = a_V + a_R + a_B.
double traction_accel(double a_v, double a_r, double a_b);

/// Discrete engine characteristic: torque limit curve and a brake-specific fuel
/// consumption grid over (engine speed, engine torque).
class EngineMap
{
public:
  EngineMap() = default;
  /// `efficiency` is row-major with one row per torque grid value.
  EngineMap(
    std::vector<double> speed_grid, std::vector<double> torque_grid,
    std::vector<double> max_torque_curve, std::vector<double> efficiency,
    double speed_min, double speed_max, double torque_max);

  const std::vector<double> & speed_grid() const { return speed_grid_; }
  const std::vector<double> & torque_grid() const { return torque_grid_; }
  const std::vector<double> & max_torque_curve() const { return max_torque_curve_; }
  double efficiency_at_node(std::size_t torque_index, std::size_t speed_index) const;
  double speed_min() const { return speed_min_; }
  double speed_max() const { return speed_max_; }
  double torque_max() const { return torque_max_; }

  /// Torque limit at `omega`, linear between curve points and capped by torque_max.
  double max_torque(double omega) const;
  /// Engine power in W, bilinear over node values omega*T.
  double power(double omega, double torque) const;
  /// BSFC in g/kWh, bilinear over the efficiency grid.
  double efficiency(double omega, double torque) const;

  static EngineMap load_csv(
    const std::filesystem::path & efficiency_csv, const std::filesystem::path & torque_limit_csv,
    double speed_min = 62.0, double speed_max = 630.0, double torque_max = 724.0);
  void save_csv(
    const std::filesystem::path & efficiency_csv,
    const std::filesystem::path & torque_limit_csv) const;

private:
  double bilinear(const std::vector<double> & nodes, double omega, double torque) const;

  std::vector<double> speed_grid_;
  std::vector<double> torque_grid_;
  std::vector<double> max_torque_curve_;
  std::vector<double> efficiency_;
  std::vector<double> power_nodes_;
  double speed_min_ = 0.0;
  double speed_max_ = 0.0;
  double torque_max_ = 0.0;
};

/// Synthetic diesel-truck map (Willans-line fuel model sampled on a grid), bounded by
/// [62, 630] rad/s and [0, 724] N m.
EngineMap synthetic_truck_map();

struct EngineState
{
  double engine_speed = 0.0;    // rad/s
  double engine_torque = 0.0;   // N m
  int gear_index = 1;           // 1-based
  double power = 0.0;           // W
  double efficiency = 0.0;      // g/kWh, 0 when infeasible
  bool feasible = false;
  std::string violation;        // empty when feasible
};

/// Engine operating point reached at speed v with traction acceleration u in `gear_index`.
/// Points outside the map bounds are flagged, never thrown.
EngineState engine_state(
  double v, double u, int gear_index, const VehicleParams & params, const EngineMap & map);

/// Diesel density, g/ml.
inline constexpr double kFuelDensity = 0.85;

/// Fuel rate in ml/s from the engine map. Zero engine speed is treated as idle.
/// Throws Error(kOutOfBounds) naming the violated bound.
double map_fuel_rate(const EngineState & state, const EngineMap & map);

/// f_r = P_e * eta_f / c_u with c_u = rho_fuel * 1000 * 3600; P_e in W, eta_f in g/kWh.
double fuel_rate_from_power(double power_w, double bsfc_g_kwh);

}  // namespace ecotraj

#endif  // ECOTRAJ__VEHICLE_MODEL_HPP_
