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

// Python bindings. Structured results cross the boundary as JSON text and are
// decoded by the ecotraj package.

#include <filesystem>
#include <optional>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ecotraj/environment.hpp"
#include "ecotraj/error.hpp"
#include "ecotraj/experiment.hpp"
#include "ecotraj/fuel_model.hpp"
#include "ecotraj/scenario.hpp"
#include "ecotraj/sim.hpp"

namespace py = pybind11;
using namespace ecotraj;

namespace
{

FuelCoefficients coeffs_arg(const std::string & coefficients_json)
{
  return fuel_coefficients_from_json(nlohmann::json::parse(coefficients_json));
}

std::string fit_map(const std::string & vehicle, const std::string & map, const std::string & torque_limit)
{
  const VehicleParams params = vehicle_preset(vehicle);
  const EngineMap engine = map.empty() ? synthetic_truck_map() : EngineMap::load_csv(map, torque_limit);
  const auto vs = kDefaultSpeedGrid.values();
  const auto as = kDefaultAccelGrid.values();
  const auto samples = optimize_gears(engine, params, vs, as);
  const FitResult fit = fit_fuel_model(samples);
  return fit_document(fit, {{"vehicle", params.name}, {"map", map.empty() ? "synthetic" : map}}).dump();
}

std::string metrics_json(double fuel, double distance, double time, std::optional<py::tuple> leader)
{
  RunTotals t;
  t.fuel_consumption = fuel;
  t.travel_distance = distance;
  t.travel_time = time;
  t.episodes = t.completed_episodes = 1;
  if (!leader) {
    return to_json(compute_metrics(t)).dump();
  }
  RunTotals l = t;
  l.fuel_consumption = (*leader)[0].cast<double>();
  l.travel_distance = (*leader)[1].cast<double>();
  l.travel_time = (*leader)[2].cast<double>();
  return to_json(compute_metrics(t, &l)).dump();
}

std::string episode_json(
  const std::string & vehicle, const std::string & method, double horizon, const std::string & cycle,
  const std::string & road, bool slope_prediction, const std::string & coefficients)
{
  EpisodeConfig c;
  c.vehicle = vehicle_preset(vehicle);
  c.fuel = coefficients.empty() ? fuel_preset(vehicle) : coeffs_arg(coefficients);
  c.method = method_from_string(method);
  c.horizon_s = horizon;
  c.road = SlopeProfile::named(road);
  c.use_slope_prediction = slope_prediction;
  if (cycle == "synthetic_highway" || cycle == "synthetic_urban") {
    const RawCycle raw = cycle == "synthetic_highway" ? synthetic_highway_cycle() : synthetic_urban_cycle();
    c.cycle = make_driving_cycle(raw.name, raw.time, raw.speed, c.dt);
  } else {
    c.cycle = load_driving_cycle(cycle, c.dt);
  }
  const EpisodeResult r = run_episode(c);
  nlohmann::json doc;
  doc["agent"] = r.agent;
  doc["metrics"] = to_json(r.metrics);
  doc["failed_step"] = r.failed_step;
  doc["failure"] = r.failure;
  doc["failure_row"] = r.failure_row;
  auto series = [](const TrajectoryLog & log) {
    nlohmann::json s = {{"t", nlohmann::json::array()}, {"s", nlohmann::json::array()},
                        {"v", nlohmann::json::array()}, {"gap", nlohmann::json::array()},
                        {"fuel_cum", nlohmann::json::array()}};
    for (const auto & row : log.rows) {
      s["t"].push_back(row.t);
      s["s"].push_back(row.s);
      s["v"].push_back(row.v);
      s["gap"].push_back(row.gap);
      s["fuel_cum"].push_back(row.fuel_cum);
    }
    return s;
  };
  doc["log"] = series(r.log);
  doc["leader_log"] = series(r.leader_log);
  return doc.dump();
}

void write_bundled_data(const std::filesystem::path & dir)
{
  std::filesystem::create_directories(dir / "cycles");
  std::filesystem::create_directories(dir / "maps");
  save_raw_cycle(synthetic_highway_cycle(), dir / "cycles" / "synthetic_highway.csv");
  save_raw_cycle(synthetic_urban_cycle(), dir / "cycles" / "synthetic_urban.csv");
  synthetic_truck_map().save_csv(dir / "maps" / "truck_map.csv", dir / "maps" / "truck_map_torque_limit.csv");
}

}  // namespace

PYBIND11_MODULE(_ecotraj, m)
{
  m.doc() = "Native core of the ecotraj package";

  py::register_exception<Error>(m, "EcotrajError", PyExc_RuntimeError);

  m.def("fuel_preset_json", [](const std::string & name) { return to_json(fuel_preset(name)).dump(); });
  m.def("fuel_rate", [](double v, double u, const std::string & coefficients) {
    return fuel_rate_hat(v, u, coeffs_arg(coefficients));
  });
  m.def("derived_coeffs", [](const std::string & vehicle) {
    const DerivedCoeffs k = derived_coeffs(vehicle_preset(vehicle));
    return py::make_tuple(k.k1, k.k2, k.k3);
  });
  m.def("fit_map_json", &fit_map, py::arg("vehicle"), py::arg("map") = "", py::arg("torque_limit") = "");
  m.def("metrics_json", &metrics_json, py::arg("fuel_ml"), py::arg("distance_m"), py::arg("time_s"),
        py::arg("leader") = py::none());
  m.def("slope_at", [](double s, const std::string & road) { return slope_at(s, SlopeProfile::named(road)); });
  m.def("elevation_at", [](double s, const std::string & road) {
    return elevation_at(s, SlopeProfile::named(road));
  });
  m.def("episode_json", &episode_json, py::arg("vehicle"), py::arg("method"), py::arg("horizon"),
        py::arg("cycle"), py::arg("road"), py::arg("slope_prediction"), py::arg("coefficients") = "",
        py::call_guard<py::gil_scoped_release>());
  m.def("scenario_round_trip", [](const std::string & text) {
    return serialize_scenario(parse_scenario(text));
  });
  m.def("write_bundled_data", &write_bundled_data);
  m.def("sha256_file", [](const std::filesystem::path & p) { return sha256_file(p); });
}
