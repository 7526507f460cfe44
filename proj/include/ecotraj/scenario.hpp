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


#ifndef ECOTRAJ__SCENARIO_HPP_
#define ECOTRAJ__SCENARIO_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecotraj/environment.hpp"
#include "ecotraj/ocp.hpp"
#include "ecotraj/sim.hpp"
#include "ecotraj/solvers.hpp"

namespace ecotraj
{

/// A vehicle entry of the scenario. Optional files override the preset.
struct VehicleEntry
{
  std::string preset = "truck";
  std::string params;        // TOML with a [vehicle] table
  std::string coefficients;  // fuel coefficients JSON
  std::string engine_map;    // efficiency grid CSV, engine-map metering only
  std::string torque_limit;  // torque limit CSV paired with engine_map

  bool operator==(const VehicleEntry &) const = default;
};

struct CycleEntry
{
  std::string name;
  std::string path;
  int repeat = 1;

  bool operator==(const CycleEntry &) const = default;
};

/// The full experiment description. Relative paths are resolved against the
/// directory of the config file when it is loaded.
struct ScenarioConfig
{
  std::vector<VehicleEntry> vehicles;
  double dt = 0.1;
  double d_init = 50.0;
  std::vector<CycleEntry> cycles;
  std::vector<SlopeProfile> roads;

  std::vector<Method> methods{Method::kQp, Method::kSqp, Method::kNlp};
  std::vector<double> horizons{5.0};
  std::vector<bool> slope_prediction{true};
  double time_headway = 1.5;
  bool warm_start = true;
  std::map<Method, MethodTuning> tuning;

  SolverConfig solver;

  std::string output_directory = "results";
  bool write_logs = false;
  MeteringMode metering = MeteringMode::kFitted;

  /// Structural checks plus existence of every referenced file.
  void validate() const;
  bool operator==(const ScenarioConfig &) const = default;
};

/// Parses TOML text. Relative paths are joined onto `base_dir`.
ScenarioConfig parse_scenario(std::string_view text, const std::filesystem::path & base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path & path);
std::string serialize_scenario(const ScenarioConfig & config);

/// Vehicle parameters and fuel coefficients after applying the entry's files.
struct ResolvedVehicle
{
  VehicleParams params;
  FuelCoefficients fuel;
  std::shared_ptr<const EngineMap> engine_map;
};

ResolvedVehicle resolve_vehicle(const VehicleEntry & entry, MeteringMode metering);

}  // namespace ecotraj

#endif  // ECOTRAJ__SCENARIO_HPP_
