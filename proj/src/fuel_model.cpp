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

#include "ecotraj/fuel_model.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>

#include "ecotraj/error.hpp"

namespace ecotraj
{

namespace
{
constexpr std::array<const char *, 8> kParamNames = {"o0", "o1", "o2", "o3",
                                                     "o4", "c0", "c1", "c2"};

std::array<double, 8> design_row(double v, double u)
{
  const double v2 = v * v;
  return {1.0, v, v2, v2 * v, v2 * v2, u, u * v, u * v2};
}
}  // namespace

FuelCoefficients sedan_fuel_preset()
{
  return {{1.4627e-1, 1.0254e-2, -9.2812e-4, 2.154e-5, -4.2427e-7}, {0.07224, 0.09681, 1.0750e-3}};
}

FuelCoefficients truck_fuel_preset()
{
  return {{3.351e-1, 9.0901e-3, 3.7574e-8, 3.4935e-8, 2.4230e-4}, {1.6550e-1, 3.6070e-1, 2.4223e-4}};
}

FuelCoefficients fuel_preset(std::string_view vehicle_name)
{
  std::string lower(vehicle_name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  if (lower == "sedan") {
    return sedan_fuel_preset();
  }
  if (lower == "truck") {
    return truck_fuel_preset();
  }
  throw Error(
    ErrorCode::kInvalidArgument, fmt::format("no fuel coefficients preset for '{}'", vehicle_name));
}

double fuel_rate_hat(double v, double u, const FuelCoefficients & k)
{
  const double base = k.o[0] + v * (k.o[1] + v * (k.o[2] + v * (k.o[3] + v * k.o[4])));
  return base + (k.c[0] + v * (k.c[1] + v * k.c[2])) * u;
}

FuelDerivatives fuel_rate_hat_derivatives(double v, double u, const FuelCoefficients & k)
{
  FuelDerivatives d;
  d.dv = k.o[1] + v * (2.0 * k.o[2] + v * (3.0 * k.o[3] + v * 4.0 * k.o[4])) +
         (k.c[1] + 2.0 * k.c[2] * v) * u;
  d.du = k.c[0] + v * (k.c[1] + v * k.c[2]);
  d.dvv = 2.0 * k.o[2] + v * (6.0 * k.o[3] + v * 12.0 * k.o[4]) + 2.0 * k.c[2] * u;
  d.duu = 0.0;
  d.dvu = k.c[1] + 2.0 * k.c[2] * v;
  return d;
}

std::vector<double> SamplingGrid::values() const
{
  if (!(step > 0.0) || stop < start) {
    throw Error(ErrorCode::kInvalidArgument, "sampling grid needs step > 0 and stop >= start");
  }
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
  out.reserve(count);
  for (long i = 0; i < count; ++i) {
    out.push_back(start + step * static_cast<double>(i));
  }
  return out;
}

std::vector<GearOptSample> optimize_gears(
  const EngineMap & map, const VehicleParams & params, std::span<const double> v_range,
  std::span<const double> a_range)
{
  if (v_range.empty() || a_range.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "gear optimization grids must be non-empty");
  }
  params.validate();
  const DerivedCoeffs coeffs = derived_coeffs(params);
  const int gears = static_cast<int>(params.gear_ratios.size());

  std::vector<GearOptSample> samples;
  for (double v : v_range) {
    for (double a : a_range) {
      const double u = traction_accel(a, resistance_accel(v, 0.0, coeffs), 0.0);
      GearOptSample best{v, u, std::numeric_limits<double>::infinity(), 0};
      for (int gear = 1; gear <= gears; ++gear) {
        const EngineState state = engine_state(v, u, gear, params, map);
        if (!state.feasible) {
          continue;
        }
        const double rate = map_fuel_rate(state, map);
        if (rate < best.opt_fuel_rate) {
          best.opt_fuel_rate = rate;
          best.opt_gear = gear;
        }
      }
      if (best.opt_gear != 0) {
        samples.push_back(best);
      }
    }
  }
  if (samples.empty()) {
    throw Error(
      ErrorCode::kNoFeasibleSamples, "no (v, a) sample reaches a feasible engine operating point");
  }
  return samples;
}

FitReport evaluate_fit(std::span<const GearOptSample> samples, const FuelCoefficients & coeffs)
{
  FitReport report;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  double restricted_sum = 0.0;
  for (const auto & s : samples) {
    if (s.u <= 0.0) {
      continue;
    }
    const double err = std::abs(s.opt_fuel_rate - fuel_rate_hat(s.v, s.u, coeffs));
    abs_sum += err;
    sq_sum += err * err;
    ++report.sample_count;
    if (s.v > 5.0 && s.v < 25.0 && s.u > 0.1 && s.u < 1.0) {
      restricted_sum += err;
      ++report.restricted_count;
    }
  }
  if (report.sample_count > 0) {
    report.mean_abs_error = abs_sum / static_cast<double>(report.sample_count);
    report.rms_error = std::sqrt(sq_sum / static_cast<double>(report.sample_count));
  }
  if (report.restricted_count > 0) {
    report.restricted_mean_abs_error = restricted_sum / static_cast<double>(report.restricted_count);
  }
  return report;
}

FitResult fit_fuel_model(std::span<const GearOptSample> samples)
{
  std::vector<const GearOptSample *> used;
  for (const auto & s : samples) {
    if (s.u > 0.0) {
      used.push_back(&s);
    }
  }
  if (used.size() < kParamNames.size()) {
    throw Error(
      ErrorCode::kInvalidArgument,
      fmt::format("fuel fit needs at least 8 samples with u > 0, got {}", used.size()));
  }

  const auto n = static_cast<Eigen::Index>(used.size());
  Eigen::MatrixXd design(n, 8);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = design_row(used[i]->v, used[i]->u);
    for (int j = 0; j < 8; ++j) {
      design(i, j) = row[j];
    }
    target(i) = used[i]->opt_fuel_rate;
  }
  // Column equilibration keeps the rank decision independent of the v^4 magnitude.
  Eigen::VectorXd scale = design.colwise().norm().transpose();
  for (int j = 0; j < 8; ++j) {
    if (scale(j) == 0.0) {
      scale(j) = 1.0;
    }
  }
  const Eigen::MatrixXd scaled = design * scale.cwiseInverse().asDiagonal();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(1e-10);
  if (qr.rank() < 8) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeFullV);
    const auto & sv = svd.singularValues();
    std::string directions;
    for (int k = 0; k < 8; ++k) {
      if (sv(k) > 1e-10 * sv(0)) {
        continue;
      }
      Eigen::VectorXd dir = svd.matrixV().col(k);
      std::string term;
      for (int j = 0; j < 8; ++j) {
        if (std::abs(dir(j)) > 1e-3) {
          term += fmt::format("{}{:+.3f}*{}", term.empty() ? "" : " ", dir(j), kParamNames[j]);
        }
      }
      directions += fmt::format("{}[{}]", directions.empty() ? "" : ", ", term);
    }
    throw Error(
      ErrorCode::kRankDeficient,
      fmt::format(
        "fuel fit design matrix has rank {} < 8; unidentifiable directions: {}", qr.rank(),
        directions));
  }
  const Eigen::VectorXd solution = scale.cwiseInverse().asDiagonal() * qr.solve(target);

  FitResult result;
  for (int j = 0; j < 5; ++j) {
    result.coeffs.o[j] = solution(j);
  }
  for (int j = 0; j < 3; ++j) {
    result.coeffs.c[j] = solution(5 + j);
  }
  result.report = evaluate_fit(samples, result.coeffs);
  return result;
}

nlohmann::json to_json(const FuelCoefficients & k)
{
  nlohmann::json j;
  for (int i = 0; i < 5; ++i) {
    j[kParamNames[i]] = k.o[i];
  }
  for (int i = 0; i < 3; ++i) {
    j[kParamNames[5 + i]] = k.c[i];
  }
  return j;
}

FuelCoefficients fuel_coefficients_from_json(const nlohmann::json & j)
{
  FuelCoefficients k;
  for (int i = 0; i < 8; ++i) {
    const auto it = j.find(kParamNames[i]);
    if (it == j.end() || !it->is_number()) {
      throw Error(
        ErrorCode::kParse, fmt::format("coefficients object lacks numeric key '{}'", kParamNames[i]));
    }
    (i < 5 ? k.o[i] : k.c[i - 5]) = it->get<double>();
  }
  return k;
}

FuelCoefficients load_fuel_coefficients(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  try {
    return fuel_coefficients_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

}  // namespace ecotraj
