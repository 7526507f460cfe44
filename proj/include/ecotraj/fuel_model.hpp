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

#ifndef ECOTRAJ__FUEL_MODEL_HPP_
#define ECOTRAJ__FUEL_MODEL_HPP_

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecotraj/vehicle_model.hpp"

namespace ecotraj
{

struct GearOptSample
{
  double v = 0.0;               // m/s
  double u = 0.0;               // m/s^2
  double opt_fuel_rate = 0.0;   // ml/s
  int opt_gear = 0;             // 1-based
};

/// Bivariate fuel-rate polynomial
///   f(v, u) = o0 + o1 v + o2 v^2 + o3 v^3 + o4 v^4 + (c0 + c1 v + c2 v^2) u
/// in ml/s for v in m/s and u in m/s^2.
struct FuelCoefficients
{
  std::array<double, 5> o{};
  std::array<double, 3> c{};

  bool operator==(const FuelCoefficients &) const = default;
};

FuelCoefficients sedan_fuel_preset();
FuelCoefficients truck_fuel_preset();
FuelCoefficients fuel_preset(std::string_view vehicle_name);

double fuel_rate_hat(double v, double u, const FuelCoefficients & coeffs);

struct FuelDerivatives
{
  double dv = 0.0;
  double du = 0.0;
  double dvv = 0.0;
  double duu = 0.0;  // identically zero, the model is affine in u
  double dvu = 0.0;
};

FuelDerivatives fuel_rate_hat_derivatives(double v, double u, const FuelCoefficients & coeffs);

/// Inclusive arithmetic grid used for gear optimization sampling.
struct SamplingGrid
{
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;

  std::vector<double> values() const;
};

inline constexpr SamplingGrid kDefaultSpeedGrid{0.5, 30.0, 0.5};
inline constexpr SamplingGrid kDefaultAccelGrid{-1.0, 2.0, 0.1};

/// Enumerates every gear for each (v, a) pair on flat road and keeps the feasible gear
/// with the lowest map fuel rate (ties go to the lower gear). Pairs with no feasible
/// gear are skipped. Throws Error(kNoFeasibleSamples) if nothing is feasible.
std::vector<GearOptSample> optimize_gears(
  const EngineMap & map, const VehicleParams & params, std::span<const double> v_range,
  std::span<const double> a_range);

struct FitReport
{
  std::size_t sample_count = 0;
  double mean_abs_error = 0.0;
  double rms_error = 0.0;
  /// Over v in (5, 25) m/s and u in (0.1, 1.0) m/s^2; zero when no sample falls there.
  double restricted_mean_abs_error = 0.0;
  std::size_t restricted_count = 0;
};

struct FitResult
{
  FuelCoefficients coeffs;
  FitReport report;
};

/// Linear least-squares fit of the fuel polynomial. Samples with u <= 0 are ignored.
/// Throws Error(kInvalidArgument) for fewer than 8 usable samples and
/// Error(kRankDeficient) naming the unidentifiable parameter combinations.
FitResult fit_fuel_model(std::span<const GearOptSample> samples);

/// Residual statistics of `coeffs` against `samples` (u <= 0 samples ignored).
FitReport evaluate_fit(std::span<const GearOptSample> samples, const FuelCoefficients & coeffs);

nlohmann::json to_json(const FuelCoefficients & coeffs);
FuelCoefficients fuel_coefficients_from_json(const nlohmann::json & j);
FuelCoefficients load_fuel_coefficients(const std::filesystem::path & path);

}  // namespace ecotraj

#endif  // ECOTRAJ__FUEL_MODEL_HPP_
