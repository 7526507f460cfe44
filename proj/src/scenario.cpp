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

#include "ecotraj/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

#include "ecotraj/error.hpp"

namespace ecotraj
{

namespace
{

namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string & message)
{
  throw Error(ErrorCode::kParse, message);
}

void check_keys(
  const toml::table & table, std::string_view where, std::initializer_list<std::string_view> allowed)
{
  for (const auto & [key, node] : table) {
    bool known = false;
    for (const auto a : allowed) {
      known = known || key.str() == a;
    }
    if (!known) {
      fail(fmt::format("unknown key '{}' in {}", key.str(), where));
    }
  }
}

double get_double(const toml::table & t, std::string_view key, double fallback, std::string_view where)
{
  const auto * node = t.get(key);
  if (node == nullptr) {
    return fallback;
  }
  if (const auto v = node->value<double>()) {
    return *v;
  }
  fail(fmt::format("{}.{} must be a number", where, key));
}

int get_int(const toml::table & t, std::string_view key, int fallback, std::string_view where)
{
  const auto * node = t.get(key);
  if (node == nullptr) {
    return fallback;
  }
  if (const auto v = node->value_exact<int64_t>()) {
    return static_cast<int>(*v);
  }
  fail(fmt::format("{}.{} must be an integer", where, key));
}

bool get_bool(const toml::table & t, std::string_view key, bool fallback, std::string_view where)
{
  const auto * node = t.get(key);
  if (node == nullptr) {
    return fallback;
  }
  if (const auto v = node->value_exact<bool>()) {
    return *v;
  }
  fail(fmt::format("{}.{} must be a boolean", where, key));
}

std::string get_string(
  const toml::table & t, std::string_view key, const std::string & fallback, std::string_view where)
{
  const auto * node = t.get(key);
  if (node == nullptr) {
    return fallback;
  }
  if (const auto v = node->value_exact<std::string>()) {
    return *v;
  }
  fail(fmt::format("{}.{} must be a string", where, key));
}

const toml::array * get_array(const toml::table & t, std::string_view key, std::string_view where)
{
  const auto * node = t.get(key);
  if (node == nullptr) {
    return nullptr;
  }
  if (const auto * a = node->as_array()) {
    return a;
  }
  fail(fmt::format("{}.{} must be an array", where, key));
}

std::vector<double> get_doubles(const toml::table & t, std::string_view key, std::string_view where)
{
  std::vector<double> out;
  if (const auto * a = get_array(t, key, where)) {
    for (const auto & e : *a) {
      const auto v = e.value<double>();
      if (!v) {
        fail(fmt::format("{}.{} must contain numbers", where, key));
      }
      out.push_back(*v);
    }
  }
  return out;
}

const toml::table * get_table(const toml::table & t, std::string_view key, std::string_view where)
{
  const auto * node = t.get(key);
  if (node == nullptr) {
    return nullptr;
  }
  if (const auto * tt = node->as_table()) {
    return tt;
  }
  fail(fmt::format("{}.{} must be a table", where, key));
}

std::vector<const toml::table *> get_table_array(
  const toml::table & t, std::string_view key, std::string_view where)
{
  std::vector<const toml::table *> out;
  if (const auto * a = get_array(t, key, where)) {
    for (const auto & e : *a) {
      const auto * tt = e.as_table();
      if (tt == nullptr) {
        fail(fmt::format("{}.{} must be an array of tables", where, key));
      }
      out.push_back(tt);
    }
  }
  return out;
}

std::string resolve(const std::string & path, const fs::path & base)
{
  if (path.empty() || base.empty() || fs::path(path).is_absolute()) {
    return path;
  }
  return (base / path).lexically_normal().string();
}

SlopeProfile parse_road(const toml::table & t, std::size_t index)
{
  const std::string where = fmt::format("environment.roads[{}]", index);
  check_keys(t, where, {"name", "preset", "theta0", "amplitudes", "wavelengths", "h0"});
  SlopeProfile road;
  const std::string preset = get_string(t, "preset", "", where);
  if (!preset.empty()) {
    road = SlopeProfile::named(preset);
  }
  road.name = get_string(t, "name", preset, where);
  if (road.name.empty()) {
    fail(where + " needs a name");
  }
  road.theta0 = get_double(t, "theta0", road.theta0, where);
  road.h0 = get_double(t, "h0", road.h0, where);
  if (t.contains("amplitudes") || t.contains("wavelengths")) {
    const auto amps = get_doubles(t, "amplitudes", where);
    const auto waves = get_doubles(t, "wavelengths", where);
    if (amps.size() != waves.size()) {
      fail(where + ": amplitudes and wavelengths differ in length");
    }
    road.components.clear();
    for (std::size_t i = 0; i < amps.size(); ++i) {
      road.components.push_back({amps[i], waves[i]});
    }
  }
  return road;
}

void parse_tuning(const toml::table & t, Method method, ScenarioConfig & cfg)
{
  const std::string where = fmt::format("ocp.{}", to_string(method));
  check_keys(t, where, {"w1", "w2", "w3", "d_min", "d_max"});
  MethodTuning tuning;
  if (t.contains("w1") || t.contains("w2") || t.contains("w3")) {
    Weights w = HorizonSpec::for_method(method, truck_preset(), 5.0).weights;
    w.w1 = get_double(t, "w1", w.w1, where);
    w.w2 = get_double(t, "w2", w.w2, where);
    w.w3 = get_double(t, "w3", w.w3, where);
    tuning.weights = w;
  }
  if (t.contains("d_min")) {
    tuning.d_min = get_double(t, "d_min", 0.0, where);
  }
  if (t.contains("d_max")) {
    tuning.d_max = get_double(t, "d_max", 0.0, where);
  }
  cfg.tuning[method] = tuning;
}

}  // namespace

void ScenarioConfig::validate() const
{
  auto invalid = [](const std::string & m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (vehicles.empty() || cycles.empty() || roads.empty()) {
    invalid("scenario needs at least one vehicle, cycle and road");
  }
  if (methods.empty() || horizons.empty() || slope_prediction.empty()) {
    invalid("scenario needs at least one method, horizon and slope-prediction flag");
  }
  if (!(dt > 0.0)) {
    invalid("environment.dt must be positive");
  }
  if (!(d_init > 0.0)) {
    invalid("environment.d_init must be positive");
  }
  for (const double h : horizons) {
    if (!(h >= dt)) {
      invalid(fmt::format("horizon {} s is shorter than one step", h));
    }
  }
  auto require_file = [&](const std::string & path, std::string_view what) {
    if (!path.empty() && !fs::exists(path)) {
      invalid(fmt::format("{} '{}' does not exist", what, path));
    }
  };
  std::set<std::string> names;
  for (const auto & c : cycles) {
    if (c.name.empty() || !names.insert(c.name).second) {
      invalid(fmt::format("cycle names must be unique and non-empty ('{}')", c.name));
    }
    if (c.path.empty()) {
      invalid(fmt::format("cycle '{}' has no path", c.name));
    }
    require_file(c.path, "cycle file");
    if (c.repeat < 1) {
      invalid(fmt::format("cycle '{}' repeat must be >= 1", c.name));
    }
  }
  names.clear();
  for (const auto & r : roads) {
    if (!names.insert(r.name).second) {
      invalid(fmt::format("duplicate road name '{}'", r.name));
    }
    r.validate();
  }
  names.clear();
  for (const auto & v : vehicles) {
    vehicle_preset(v.preset);
    require_file(v.params, "vehicle params file");
    require_file(v.coefficients, "coefficients file");
    require_file(v.engine_map, "engine map file");
    require_file(v.torque_limit, "torque limit file");
    if (v.engine_map.empty() != v.torque_limit.empty()) {
      invalid("engine_map and torque_limit must be given together");
    }
  }
  solver.validate();
}

ScenarioConfig parse_scenario(std::string_view text, const fs::path & base_dir)
{
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error & e) {
    fail(fmt::format(
      "scenario line {}: {}", e.source().begin.line, e.description()));
  }
  check_keys(root, "scenario", {"vehicle", "environment", "ocp", "solver", "output"});
  ScenarioConfig cfg;

  const auto vehicles = get_table_array(root, "vehicle", "scenario");
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const auto & t = *vehicles[i];
    const std::string where = fmt::format("vehicle[{}]", i);
    check_keys(t, where, {"preset", "params", "coefficients", "engine_map", "torque_limit"});
    VehicleEntry v;
    v.preset = get_string(t, "preset", v.preset, where);
    v.params = resolve(get_string(t, "params", "", where), base_dir);
    v.coefficients = resolve(get_string(t, "coefficients", "", where), base_dir);
    v.engine_map = resolve(get_string(t, "engine_map", "", where), base_dir);
    v.torque_limit = resolve(get_string(t, "torque_limit", "", where), base_dir);
    cfg.vehicles.push_back(v);
  }

  if (const auto * env = get_table(root, "environment", "scenario")) {
    check_keys(*env, "environment", {"dt", "d_init", "cycles", "roads"});
    cfg.dt = get_double(*env, "dt", cfg.dt, "environment");
    cfg.d_init = get_double(*env, "d_init", cfg.d_init, "environment");
    const auto cycles = get_table_array(*env, "cycles", "environment");
    for (std::size_t i = 0; i < cycles.size(); ++i) {
      const std::string where = fmt::format("environment.cycles[{}]", i);
      check_keys(*cycles[i], where, {"name", "path", "repeat"});
      CycleEntry c;
      c.path = resolve(get_string(*cycles[i], "path", "", where), base_dir);
      c.name = get_string(*cycles[i], "name", fs::path(c.path).stem().string(), where);
      c.repeat = get_int(*cycles[i], "repeat", 1, where);
      cfg.cycles.push_back(c);
    }
    const auto roads = get_table_array(*env, "roads", "environment");
    for (std::size_t i = 0; i < roads.size(); ++i) {
      cfg.roads.push_back(parse_road(*roads[i], i));
    }
  }

  if (const auto * ocp = get_table(root, "ocp", "scenario")) {
    check_keys(
      *ocp, "ocp",
      {"methods", "horizons", "slope_prediction", "time_headway", "warm_start", "qp", "sqp", "nlp"});
    if (const auto * a = get_array(*ocp, "methods", "ocp")) {
      cfg.methods.clear();
      for (const auto & e : *a) {
        const auto s = e.value_exact<std::string>();
        if (!s) {
          fail("ocp.methods must contain strings");
        }
        cfg.methods.push_back(method_from_string(*s));
      }
    }
    if (ocp->contains("horizons")) {
      cfg.horizons = get_doubles(*ocp, "horizons", "ocp");
    }
    if (const auto * a = get_array(*ocp, "slope_prediction", "ocp")) {
      cfg.slope_prediction.clear();
      for (const auto & e : *a) {
        const auto b = e.value_exact<bool>();
        if (!b) {
          fail("ocp.slope_prediction must contain booleans");
        }
        cfg.slope_prediction.push_back(*b);
      }
    }
    cfg.time_headway = get_double(*ocp, "time_headway", cfg.time_headway, "ocp");
    cfg.warm_start = get_bool(*ocp, "warm_start", cfg.warm_start, "ocp");
    for (const Method m : {Method::kQp, Method::kSqp, Method::kNlp}) {
      if (const auto * t = get_table(*ocp, to_string(m), "ocp")) {
        parse_tuning(*t, m, cfg);
      }
    }
  }

  if (const auto * s = get_table(root, "solver", "scenario")) {
    check_keys(
      *s, "solver",
      {"max_iterations", "admm_max_iterations", "feasibility_tolerance", "optimality_tolerance",
       "sqp_step_tolerance", "sqp_max_outer_iterations", "sqp_damping", "polish", "time_limit_ms",
       "trace"});
    SolverConfig & c = cfg.solver;
    c.max_iterations = get_int(*s, "max_iterations", c.max_iterations, "solver");
    c.admm_max_iterations = get_int(*s, "admm_max_iterations", c.admm_max_iterations, "solver");
    c.feasibility_tolerance =
      get_double(*s, "feasibility_tolerance", c.feasibility_tolerance, "solver");
    c.optimality_tolerance =
      get_double(*s, "optimality_tolerance", c.optimality_tolerance, "solver");
    c.sqp_step_tolerance = get_double(*s, "sqp_step_tolerance", c.sqp_step_tolerance, "solver");
    c.sqp_max_outer_iterations =
      get_int(*s, "sqp_max_outer_iterations", c.sqp_max_outer_iterations, "solver");
    c.sqp_damping = get_bool(*s, "sqp_damping", c.sqp_damping, "solver");
    c.polish = get_bool(*s, "polish", c.polish, "solver");
    c.time_limit_ms = get_double(*s, "time_limit_ms", c.time_limit_ms, "solver");
    c.trace = get_bool(*s, "trace", c.trace, "solver");
  }

  if (const auto * o = get_table(root, "output", "scenario")) {
    check_keys(*o, "output", {"directory", "write_logs", "metering"});
    cfg.output_directory = resolve(get_string(*o, "directory", cfg.output_directory, "output"), base_dir);
    cfg.write_logs = get_bool(*o, "write_logs", cfg.write_logs, "output");
    cfg.metering = metering_from_string(get_string(*o, "metering", "fitted", "output"));
  } else {
    cfg.output_directory = resolve(cfg.output_directory, base_dir);
  }
  return cfg;
}

ScenarioConfig load_scenario(const fs::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, fmt::format("cannot open scenario '{}'", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_scenario(buffer.str(), fs::absolute(path).parent_path());
  } catch (const Error & e) {
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string serialize_scenario(const ScenarioConfig & cfg)
{
  toml::table root;

  toml::array vehicles;
  for (const auto & v : cfg.vehicles) {
    toml::table t{{"preset", v.preset}};
    auto put = [&t](std::string_view key, const std::string & value) {
      if (!value.empty()) {
        t.insert(key, value);
      }
    };
    put("params", v.params);
    put("coefficients", v.coefficients);
    put("engine_map", v.engine_map);
    put("torque_limit", v.torque_limit);
    vehicles.push_back(std::move(t));
  }
  root.insert("vehicle", std::move(vehicles));

  toml::table env{{"dt", cfg.dt}, {"d_init", cfg.d_init}};
  toml::array cycles;
  for (const auto & c : cfg.cycles) {
    cycles.push_back(toml::table{{"name", c.name}, {"path", c.path}, {"repeat", c.repeat}});
  }
  env.insert("cycles", std::move(cycles));
  toml::array roads;
  for (const auto & r : cfg.roads) {
    toml::array amps;
    toml::array waves;
    for (const auto & c : r.components) {
      amps.push_back(c.amplitude);
      waves.push_back(c.wavelength);
    }
    roads.push_back(toml::table{
      {"name", r.name}, {"theta0", r.theta0}, {"amplitudes", std::move(amps)},
      {"wavelengths", std::move(waves)}, {"h0", r.h0}});
  }
  env.insert("roads", std::move(roads));
  root.insert("environment", std::move(env));

  toml::array methods;
  for (const Method m : cfg.methods) {
    methods.push_back(std::string(to_string(m)));
  }
  toml::array horizons;
  for (const double h : cfg.horizons) {
    horizons.push_back(h);
  }
  toml::array flags;
  for (const bool f : cfg.slope_prediction) {
    flags.push_back(f);
  }
  toml::table ocp{
    {"methods", std::move(methods)},
    {"horizons", std::move(horizons)},
    {"slope_prediction", std::move(flags)},
    {"time_headway", cfg.time_headway},
    {"warm_start", cfg.warm_start}};
  for (const auto & [method, tuning] : cfg.tuning) {
    toml::table t;
    if (tuning.weights) {
      t.insert("w1", tuning.weights->w1);
      t.insert("w2", tuning.weights->w2);
      t.insert("w3", tuning.weights->w3);
    }
    if (tuning.d_min) {
      t.insert("d_min", *tuning.d_min);
    }
    if (tuning.d_max) {
      t.insert("d_max", *tuning.d_max);
    }
    ocp.insert(to_string(method), std::move(t));
  }
  root.insert("ocp", std::move(ocp));

  const SolverConfig & s = cfg.solver;
  root.insert(
    "solver", toml::table{
                {"max_iterations", s.max_iterations},
                {"admm_max_iterations", s.admm_max_iterations},
                {"feasibility_tolerance", s.feasibility_tolerance},
                {"optimality_tolerance", s.optimality_tolerance},
                {"sqp_step_tolerance", s.sqp_step_tolerance},
                {"sqp_max_outer_iterations", s.sqp_max_outer_iterations},
                {"sqp_damping", s.sqp_damping},
                {"polish", s.polish},
                {"time_limit_ms", s.time_limit_ms},
                {"trace", s.trace}});

  root.insert(
    "output", toml::table{
                {"directory", cfg.output_directory},
                {"write_logs", cfg.write_logs},
                {"metering", std::string(to_string(cfg.metering))}});

  std::ostringstream out;
  out << root << '\n';
  return out.str();
}

ResolvedVehicle resolve_vehicle(const VehicleEntry & entry, MeteringMode metering)
{
  ResolvedVehicle r;
  r.params = vehicle_preset(entry.preset);
  if (!entry.params.empty()) {
    r.params = load_vehicle_params(entry.params, r.params);
  }
  r.fuel = entry.coefficients.empty() ? fuel_preset(entry.preset)
                                      : load_fuel_coefficients(entry.coefficients);
  if (metering == MeteringMode::kEngineMap) {
    if (!entry.engine_map.empty()) {
      r.engine_map = std::make_shared<const EngineMap>(
        EngineMap::load_csv(entry.engine_map, entry.torque_limit));
    } else if (vehicle_preset(entry.preset).name == "Truck") {
      r.engine_map = std::make_shared<const EngineMap>(synthetic_truck_map());
    } else {
      throw Error(
        ErrorCode::kInvalidArgument,
        fmt::format("engine-map metering for '{}' needs an engine_map file", entry.preset));
    }
  }
  return r;
}

}  // namespace ecotraj
