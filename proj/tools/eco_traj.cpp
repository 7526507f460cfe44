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

// eco-traj: fit, run, matrix and plotdata subcommands.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ecotraj/error.hpp"
#include "ecotraj/experiment.hpp"
#include "ecotraj/fuel_model.hpp"
#include "ecotraj/scenario.hpp"
#include "ecotraj/sim.hpp"

namespace fs = std::filesystem;
using namespace ecotraj;

namespace
{

constexpr int kExitUsage = 2;
constexpr int kExitRunFailed = 1;

struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

void require_file(const std::string & path, const char * what)
{
  if (!fs::is_regular_file(path)) {
    throw UsageError(fmt::format("{} not found: {}", what, path));
  }
}

void write_json(const nlohmann::json & doc, const fs::path & path)
{
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------- fit

struct FitArgs
{
  std::string preset;
  std::string vehicle = "truck";
  std::string map;
  std::string torque_limit;
  std::string params;
  bool synthetic_map = false;
  std::string out;
};

int cmd_fit(const FitArgs & a)
{
  if (!a.preset.empty()) {
    nlohmann::json doc = to_json(fuel_preset(a.preset));
    doc["provenance"] = {{"source", "preset"}, {"preset", a.preset}};
    write_json(doc, a.out);
    std::cout << fmt::format("wrote {} ({} preset coefficients)\n", a.out, a.preset);
    return 0;
  }
  if (a.map.empty() == !a.synthetic_map) {
    throw UsageError("fit needs exactly one of --map, --synthetic-map or --preset");
  }

  VehicleParams params = vehicle_preset(a.vehicle);
  nlohmann::json prov = {{"vehicle", params.name}};
  if (!a.params.empty()) {
    require_file(a.params, "params file");
    params = load_vehicle_params(a.params, params);
    prov["params"] = {{"path", a.params}, {"sha256", sha256_file(a.params)}};
  }

  EngineMap map;
  if (a.synthetic_map) {
    map = synthetic_truck_map();
    prov["map"] = "synthetic";
  } else {
    require_file(a.map, "engine map");
    std::string tl = a.torque_limit;
    if (tl.empty()) {
      const fs::path m(a.map);
      tl = (m.parent_path() / (m.stem().string() + "_torque_limit.csv")).string();
    }
    require_file(tl, "torque limit curve");
    map = EngineMap::load_csv(a.map, tl);
    prov["map"] = {{"path", a.map}, {"sha256", sha256_file(a.map)}};
    prov["torque_limit"] = {{"path", tl}, {"sha256", sha256_file(tl)}};
  }
  prov["speed_grid"] = {kDefaultSpeedGrid.start, kDefaultSpeedGrid.stop, kDefaultSpeedGrid.step};
  prov["accel_grid"] = {kDefaultAccelGrid.start, kDefaultAccelGrid.stop, kDefaultAccelGrid.step};

  const auto vs = kDefaultSpeedGrid.values();
  const auto as = kDefaultAccelGrid.values();
  const auto samples = optimize_gears(map, params, vs, as);
  const FitResult fit = fit_fuel_model(samples);
  write_json(fit_document(fit, prov), a.out);
  std::cout << fmt::format(
    "samples {}  mean_abs_error {:.4f} ml/s  rms_error {:.4f} ml/s\nwrote {}\n",
    fit.report.sample_count, fit.report.mean_abs_error, fit.report.rms_error, a.out);
  return 0;
}

// ---------------------------------------------------------------- run

struct RunArgs
{
  std::string vehicle = "truck";
  std::string params;
  std::string coefficients;
  std::string method = "qp";
  double horizon = 5.0;
  std::string cycle = "synthetic_highway";
  int repeat = 1;
  std::string road = "flat";
  bool no_slope_prediction = false;
  std::string metering = "fitted";
  std::string engine_map;
  std::string torque_limit;
  std::string out = "run";
};

int cmd_run(const RunArgs & a)
{
  ScenarioConfig sc;
  VehicleEntry ve;
  ve.preset = a.vehicle;
  for (const auto & [path, what, slot] :
       {std::tuple{a.params, "params file", &ve.params},
        std::tuple{a.coefficients, "coefficients file", &ve.coefficients},
        std::tuple{a.engine_map, "engine map", &ve.engine_map},
        std::tuple{a.torque_limit, "torque limit curve", &ve.torque_limit}}) {
    if (!path.empty()) {
      require_file(path, what);
      *slot = path;
    }
  }
  sc.metering = metering_from_string(a.metering);
  const ResolvedVehicle vehicle = resolve_vehicle(ve, sc.metering);

  DrivingCycle cycle;
  if (a.cycle == "synthetic_highway" || a.cycle == "synthetic_urban") {
    const RawCycle raw =
      a.cycle == "synthetic_highway" ? synthetic_highway_cycle() : synthetic_urban_cycle();
    cycle = make_driving_cycle(raw.name, raw.time, raw.speed, sc.dt);
  } else {
    require_file(a.cycle, "cycle file");
    cycle = load_driving_cycle(a.cycle, sc.dt);
    cycle.name = fs::path(a.cycle).stem().string();
  }

  sc.vehicles = {ve};
  sc.cycles = {{cycle.name, a.cycle, a.repeat}};
  sc.roads = {SlopeProfile::named(a.road)};
  const Combination combo{0, 0, 0, method_from_string(a.method), a.horizon, !a.no_slope_prediction};
  EpisodeConfig ep = episode_config(sc, combo, vehicle, cycle);
  ep.record_log = true;
  const EpisodeResult res = run_episode(ep);

  const fs::path out(a.out);
  fs::create_directories(out);
  write_log_csv(res.log, out / (res.agent + ".csv"));
  write_log_csv(res.leader_log, out / (leader_name(ep.vehicle) + ".csv"));
  nlohmann::json doc = to_json(res.metrics);
  doc["agent"] = res.agent;
  doc["cycle"] = cycle.name;
  doc["road"] = ep.road.name;
  doc["failed_step"] = res.failed_step;
  doc["failure"] = res.failure;
  doc["failure_row"] = res.failure_row;
  doc["engine_map_fallbacks"] = res.engine_map_fallbacks;
  if (res.totals.travel_distance > 0.0 && res.leader_totals.travel_distance > 0.0) {
    doc["leader"] = to_json(compute_metrics(res.leader_totals));
  }
  write_json(doc, out / "metrics.json");

  if (res.failed_step >= 0) {
    std::cout << fmt::format(
      "{}: stopped at step {} ({} {})\n", res.agent, res.failed_step, res.failure, res.failure_row);
  } else {
    std::cout << fmt::format(
      "{}: {:.4f} L/100km  {:.3f} m/s  {:.3f} ms/solve  violations {}\n", res.agent,
      res.metrics.fuel_efficiency, res.metrics.average_speed, res.metrics.average_solve_time,
      res.metrics.constraint_violation_count);
  }
  return res.failed_step < 0 && res.metrics.constraint_violation_count == 0 ? 0 : kExitRunFailed;
}

// ---------------------------------------------------------------- matrix

struct MatrixArgs
{
  std::string config;
  std::string out;
  int workers = 0;
  bool write_logs = false;
  std::string metering;
  std::vector<std::string> methods;
  std::vector<double> horizons;
  bool quiet = false;
};

int cmd_matrix(const MatrixArgs & a)
{
  require_file(a.config, "scenario config");
  ScenarioConfig sc = load_scenario(a.config);
  if (!a.out.empty()) {
    sc.output_directory = a.out;
  }
  if (a.write_logs) {
    sc.write_logs = true;
  }
  if (!a.metering.empty()) {
    sc.metering = metering_from_string(a.metering);
  }
  if (!a.methods.empty()) {
    sc.methods.clear();
    for (const auto & m : a.methods) {
      sc.methods.push_back(method_from_string(m));
    }
  }
  if (!a.horizons.empty()) {
    sc.horizons = a.horizons;
  }
  sc.validate();

  MatrixOptions opt;
  opt.workers = a.workers > 0 ? a.workers : default_worker_count();
  const fs::path out(sc.output_directory);
  if (sc.write_logs) {
    opt.log_directory = out / "logs";
  }
  if (!a.quiet) {
    opt.progress = [](const EpisodeRecord & r, std::size_t done, std::size_t total) {
      std::cerr << fmt::format(
        "[{}/{}] {} {} {} {}\n", done, total, r.agent, r.cycle, r.road,
        r.completed ? "ok" : fmt::format("stopped at {} ({} {})", r.failed_step, r.failure, r.failure_row));
    };
  }
  const MatrixReport report = run_matrix(sc, opt);
  write_matrix_outputs(report, out);

  const long violations = report.safety_violations();
  const bool ok = report.all_completed() && violations == 0;
  std::size_t failed = 0;
  for (const auto & e : report.episodes) {
    failed += e.completed ? 0 : 1;
  }
  std::cout << fmt::format(
    "{} episodes, {} stopped early, {} safety violations; results in {}\n", report.episodes.size(),
    failed, violations, out.string());
  return ok ? 0 : kExitRunFailed;
}

// ---------------------------------------------------------------- plotdata

struct PlotArgs
{
  std::vector<std::string> logs;  // label=path or path
  std::string leader;
  std::string road = "flat";
  std::string out;
};

int cmd_plotdata(const PlotArgs & a)
{
  std::vector<PlotInput> egos;
  for (const auto & item : a.logs) {
    const auto eq = item.find('=');
    const std::string path = eq == std::string::npos ? item : item.substr(eq + 1);
    std::string label = eq == std::string::npos ? fs::path(path).stem().string() : item.substr(0, eq);
    require_file(path, "log");
    egos.push_back({std::move(label), read_log_csv(path)});
  }
  std::optional<TrajectoryLog> leader;
  if (!a.leader.empty()) {
    require_file(a.leader, "leader log");
    leader = read_log_csv(a.leader);
  }
  if (egos.empty() && !leader) {
    throw UsageError("plotdata needs at least one log");
  }
  const fs::path out(a.out);
  if (out.has_parent_path()) {
    fs::create_directories(out.parent_path());
  }
  write_plot_data(egos, leader ? &*leader : nullptr, SlopeProfile::named(a.road), out);
  std::cout << "wrote " << a.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Eco-driving trajectory optimization experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "eco-traj 0.1.0");

  FitArgs fit;
  auto * f = app.add_subcommand("fit", "Fit fuel-rate coefficients from an engine map");
  f->add_option("--preset", fit.preset, "Emit the tabulated coefficients of a preset (truck, sedan)");
  f->add_option("--map", fit.map, "Efficiency grid CSV");
  f->add_option("--torque-limit", fit.torque_limit, "Torque limit CSV (default <map>_torque_limit.csv)");
  f->add_flag("--synthetic-map", fit.synthetic_map, "Use the built-in synthetic truck map");
  f->add_option("--vehicle", fit.vehicle, "Base vehicle preset")->capture_default_str();
  f->add_option("--params", fit.params, "Vehicle parameter TOML overriding the preset");
  f->add_option("--out", fit.out, "Output coefficients JSON")->required();

  RunArgs run;
  auto * r = app.add_subcommand("run", "Run one car-following episode");
  r->add_option("--vehicle", run.vehicle, "Vehicle preset")->capture_default_str();
  r->add_option("--params", run.params, "Vehicle parameter TOML");
  r->add_option("--coefficients", run.coefficients, "Fuel coefficients JSON");
  r->add_option("--method", run.method, "qp, sqp or nlp")->capture_default_str();
  r->add_option("--horizon", run.horizon, "Horizon in seconds")->capture_default_str();
  r->add_option("--cycle", run.cycle, "Cycle CSV or synthetic_highway / synthetic_urban")
    ->capture_default_str();
  r->add_option("--repeat", run.repeat, "Cycle repetitions")->capture_default_str();
  r->add_option("--road", run.road, "flat, rolling or steep")->capture_default_str();
  r->add_flag("--no-slope-prediction", run.no_slope_prediction, "Assume the current slope over the horizon");
  r->add_option("--metering", run.metering, "fitted or engine_map")->capture_default_str();
  r->add_option("--engine-map", run.engine_map, "Efficiency grid CSV for engine_map metering");
  r->add_option("--torque-limit", run.torque_limit, "Torque limit CSV paired with --engine-map");
  r->add_option("--out", run.out, "Output directory")->capture_default_str();

  MatrixArgs mx;
  auto * m = app.add_subcommand("matrix", "Run every combination of a scenario");
  m->add_option("--config", mx.config, "Scenario TOML")->required();
  m->add_option("--out", mx.out, "Output directory (overrides [output] directory)");
  m->add_option("--workers", mx.workers, "Worker threads (default ECO_TRAJ_WORKERS or all cores)");
  m->add_flag("--write-logs", mx.write_logs, "Keep per-episode trajectory logs");
  m->add_option("--metering", mx.metering, "fitted or engine_map");
  m->add_option("--methods", mx.methods, "Subset of methods");
  m->add_option("--horizons", mx.horizons, "Horizons in seconds");
  m->add_flag("--quiet", mx.quiet, "No progress lines");

  PlotArgs pd;
  auto * p = app.add_subcommand("plotdata", "Merge trajectory logs into plot series");
  p->add_option("--log", pd.logs, "Ego log, as label=path or path")->take_all();
  p->add_option("--leader", pd.leader, "Leader log");
  p->add_option("--road", pd.road, "Road profile for the elevation column")->capture_default_str();
  p->add_option("--out", pd.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*f) {
      return cmd_fit(fit);
    }
    if (*r) {
      return cmd_run(run);
    }
    if (*m) {
      return cmd_matrix(mx);
    }
    return cmd_plotdata(pd);
  } catch (const UsageError & e) {
    std::cerr << "eco-traj: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error & e) {
    std::cerr << "eco-traj: " << to_string(e.code()) << ": " << e.what() << '\n';
    return e.code() == ErrorCode::kIo || e.code() == ErrorCode::kParse ||
               e.code() == ErrorCode::kInvalidArgument
             ? kExitUsage
             : kExitRunFailed;
  } catch (const std::exception & e) {
    std::cerr << "eco-traj: " << e.what() << '\n';
    return kExitRunFailed;
  }
}
