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

#include "ecotraj/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "ecotraj/csv.hpp"
#include "ecotraj/error.hpp"

namespace ecotraj
{

namespace fs = std::filesystem;

namespace
{

std::string field(const std::string & text)
{
  if (text.find_first_of(",\"\n") == std::string::npos) {
    return text;
  }
  std::string out = "\"";
  for (const char c : text) {
    out += c;
    if (c == '"') {
      out += '"';
    }
  }
  return out + "\"";
}

std::string num(double v) { return csv::format(v); }

std::ofstream open_out(const fs::path & path)
{
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  }
  return out;
}

AggregateRow make_row(
  std::string agent, std::string vehicle, std::string method, double horizon, bool flag,
  std::string road, const RunTotals & totals, const RunTotals * leader)
{
  AggregateRow row{std::move(agent), std::move(vehicle), std::move(method), horizon, flag,
                   std::move(road), totals, {}, false};
  try {
    row.metrics = compute_metrics(totals, leader);
    row.defined = true;
  } catch (const Error &) {
    row.metrics.travel_time = totals.travel_time;
    row.metrics.travel_distance = totals.travel_distance;
    row.metrics.fuel_consumption = totals.fuel_consumption;
    row.metrics.constraint_violation_count = totals.constraint_violations;
  }
  row.metrics.completed = totals.completed_episodes == totals.episodes;
  return row;
}

std::string file_stem(const std::string & agent, const std::string & cycle, const std::string & road)
{
  std::string s = fmt::format("{}__{}__{}", agent, cycle, road);
  for (char & c : s) {
    if (c == '/' || c == '\\' || c == ' ') {
      c = '_';
    }
  }
  return s;
}

}  // namespace

std::vector<Combination> enumerate_combinations(const ScenarioConfig & config)
{
  std::vector<Combination> out;
  for (std::size_t v = 0; v < config.vehicles.size(); ++v) {
    for (const bool flag : config.slope_prediction) {
      for (const double h : config.horizons) {
        for (const Method m : config.methods) {
          for (std::size_t c = 0; c < config.cycles.size(); ++c) {
            for (std::size_t r = 0; r < config.roads.size(); ++r) {
              out.push_back({v, c, r, m, h, flag});
            }
          }
        }
      }
    }
  }
  return out;
}

bool MatrixReport::all_completed() const
{
  return std::all_of(
    episodes.begin(), episodes.end(), [](const EpisodeRecord & e) { return e.completed; });
}

long MatrixReport::safety_violations() const
{
  long n = 0;
  for (const auto & e : episodes) {
    if (e.completed && e.combo.method != Method::kSqp) {
      n += e.totals.constraint_violations;
    }
  }
  return n;
}

MatrixReport aggregate(std::vector<EpisodeRecord> episodes)
{
  MatrixReport report;
  report.episodes = std::move(episodes);

  // Insertion-ordered groups.
  std::vector<std::string> vehicles;
  std::vector<std::string> roads;
  std::map<std::string, std::vector<const EpisodeRecord *>> ego_groups;
  std::vector<std::string> ego_order;
  std::map<std::string, std::map<std::pair<std::string, std::string>, RunTotals>> leader_parts;
  for (const auto & e : report.episodes) {
    if (std::find(vehicles.begin(), vehicles.end(), e.vehicle) == vehicles.end()) {
      vehicles.push_back(e.vehicle);
    }
    if (std::find(roads.begin(), roads.end(), e.road) == roads.end()) {
      roads.push_back(e.road);
    }
    if (!ego_groups.contains(e.agent)) {
      ego_order.push_back(e.agent);
    }
    ego_groups[e.agent].push_back(&e);
    leader_parts[e.vehicle].try_emplace({e.cycle, e.road}, e.leader_totals);
  }

  auto leader_total = [&](const std::string & vehicle, const std::string & road) {
    RunTotals t;
    for (const auto & [key, part] : leader_parts[vehicle]) {
      if (road == "all" || key.second == road) {
        t += part;
      }
    }
    return t;
  };

  std::vector<std::string> scopes{"all"};
  scopes.insert(scopes.end(), roads.begin(), roads.end());
  for (const auto & scope : scopes) {
    auto & table = scope == "all" ? report.comprehensive : report.by_road;
    for (const auto & vehicle : vehicles) {
      const RunTotals lead = leader_total(vehicle, scope);
      const std::string leader_agent = fmt::format("{}-L", vehicle);
      table.push_back(make_row(leader_agent, vehicle, "leader", 0.0, true, scope, lead, nullptr));
      for (const auto & agent : ego_order) {
        const auto & group = ego_groups[agent];
        if (group.front()->vehicle != vehicle) {
          continue;
        }
        RunTotals t;
        for (const auto * e : group) {
          if (scope == "all" || e->road == scope) {
            t += e->totals;
          }
        }
        const Combination & c = group.front()->combo;
        table.push_back(make_row(
          agent, vehicle, std::string(to_string(c.method)), c.horizon_s, c.slope_prediction, scope,
          t, &lead));
      }
    }
  }

  auto find_row = [](const std::vector<AggregateRow> & rows, const std::string & vehicle,
                     const std::string & method, double h, bool flag, const std::string & road) {
    for (const auto & r : rows) {
      if (r.vehicle == vehicle && r.method == method && r.horizon_s == h &&
          r.slope_prediction == flag && r.road == road) {
        return &r;
      }
    }
    return static_cast<const AggregateRow *>(nullptr);
  };
  for (const auto & scope : scopes) {
    const auto & rows = scope == "all" ? report.comprehensive : report.by_road;
    for (const auto & nlp : rows) {
      if (nlp.method != "nlp" || nlp.road != scope) {
        continue;
      }
      const AggregateRow * qp =
        find_row(rows, nlp.vehicle, "qp", nlp.horizon_s, nlp.slope_prediction, scope);
      if (qp == nullptr || !qp->defined || !nlp.defined) {
        continue;
      }
      ComparisonRow c;
      c.vehicle = nlp.vehicle;
      c.horizon_s = nlp.horizon_s;
      c.slope_prediction = nlp.slope_prediction;
      c.road = scope;
      c.qp_agent = qp->agent;
      c.nlp_agent = nlp.agent;
      c.speed_loss_pct =
        (qp->metrics.average_speed - nlp.metrics.average_speed) / qp->metrics.average_speed * 100.0;
      c.efficiency_improvement_pct = (qp->metrics.fuel_efficiency - nlp.metrics.fuel_efficiency) /
                                     qp->metrics.fuel_efficiency * 100.0;
      c.solve_time_multiple = qp->metrics.average_solve_time > 0.0
                                ? nlp.metrics.average_solve_time / qp->metrics.average_solve_time
                                : 0.0;
      report.nlp_vs_qp.push_back(c);
    }
  }
  return report;
}

int default_worker_count()
{
  if (const char * env = std::getenv("ECO_TRAJ_WORKERS")) {
    char * end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) {
      return static_cast<int>(n);
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

EpisodeConfig episode_config(
  const ScenarioConfig & config, const Combination & combo, const ResolvedVehicle & vehicle,
  const DrivingCycle & cycle)
{
  EpisodeConfig ep;
  ep.vehicle = vehicle.params;
  ep.fuel = vehicle.fuel;
  ep.method = combo.method;
  ep.horizon_s = combo.horizon_s;
  ep.dt = config.dt;
  ep.road = config.roads.at(combo.road);
  ep.cycle = cycle;
  ep.cycle_repeat = config.cycles.at(combo.cycle).repeat;
  ep.use_slope_prediction = combo.slope_prediction;
  ep.d_init = config.d_init;
  ep.time_headway = config.time_headway;
  if (const auto it = config.tuning.find(combo.method); it != config.tuning.end()) {
    ep.tuning = it->second;
  }
  ep.solver = config.solver;
  ep.warm_start = config.warm_start;
  ep.metering = config.metering;
  ep.engine_map = vehicle.engine_map;
  return ep;
}

MatrixReport run_matrix(const ScenarioConfig & config, const MatrixOptions & options)
{
  config.validate();
  std::vector<ResolvedVehicle> vehicles;
  for (const auto & v : config.vehicles) {
    vehicles.push_back(resolve_vehicle(v, config.metering));
  }
  std::vector<DrivingCycle> cycles;
  for (const auto & c : config.cycles) {
    DrivingCycle cycle = load_driving_cycle(c.path, config.dt);
    cycle.name = c.name;
    cycles.push_back(std::move(cycle));
  }
  if (!options.log_directory.empty()) {
    fs::create_directories(options.log_directory);
  }

  const std::vector<Combination> combos = enumerate_combinations(config);
  std::vector<EpisodeRecord> records(combos.size());
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;

  auto work = [&]() {
    for (std::size_t i = next++; i < combos.size(); i = next++) {
      const Combination & combo = combos[i];
      EpisodeConfig ep = episode_config(config, combo, vehicles[combo.vehicle], cycles[combo.cycle]);
      ep.record_log = !options.log_directory.empty();
      EpisodeRecord & rec = records[i];
      rec.combo = combo;
      rec.vehicle = vehicles[combo.vehicle].params.name;
      rec.agent = ep.agent_name();
      rec.leader = leader_name(ep.vehicle);
      rec.cycle = config.cycles[combo.cycle].name;
      rec.road = ep.road.name;
      try {
        const EpisodeResult res = run_episode(ep);
        rec.totals = res.totals;
        rec.leader_totals = res.leader_totals;
        rec.completed = res.failed_step < 0;
        rec.failed_step = res.failed_step;
        rec.failure = res.failure;
        rec.failure_row = res.failure_row;
        rec.engine_map_fallbacks = res.engine_map_fallbacks;
        rec.min_plan_fuel_rate = res.min_plan_fuel_rate;
        if (ep.record_log) {
          const std::string stem = file_stem(rec.agent, rec.cycle, rec.road);
          write_log_csv(res.log, options.log_directory / (stem + ".csv"));
          write_log_csv(
            res.leader_log, options.log_directory / (file_stem(rec.leader, rec.cycle, rec.road) + ".csv"));
          std::ofstream js = open_out(options.log_directory / (stem + ".json"));
          js << to_json(res.metrics).dump(2) << '\n';
        }
      } catch (const std::exception & e) {
        rec.completed = false;
        rec.failure = "error";
        rec.failure_row = e.what();
        rec.totals.episodes = 1;
      }
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(rec, ++done, combos.size());
      }
    }
  };

  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(combos.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back(work);
    }
  }
  return aggregate(std::move(records));
}

void write_matrix_outputs(const MatrixReport & report, const fs::path & directory)
{
  fs::create_directories(directory);

  auto write_table = [&](const fs::path & path, const std::vector<AggregateRow> & rows, bool with_road) {
    std::ofstream out = open_out(path);
    out << "agent,vehicle,method,horizon_s,slope_prediction," << (with_road ? "road," : "")
        << "episodes,completed_episodes,travel_time_s,travel_distance_m,fuel_consumption_ml,"
           "average_fuel_rate_ml_s,fuel_efficiency_l_100km,average_speed_m_s,"
           "efficiency_improvement_pct,constraint_violations\n";
    for (const auto & r : rows) {
      const bool lead = r.method == "leader";
      out << field(r.agent) << ',' << r.vehicle << ',' << r.method << ','
          << (lead ? "" : num(r.horizon_s)) << ',' << (lead ? "" : (r.slope_prediction ? "true" : "false"))
          << ',';
      if (with_road) {
        out << field(r.road) << ',';
      }
      out << r.totals.episodes << ',' << r.totals.completed_episodes << ','
          << num(r.totals.travel_time) << ',' << num(r.totals.travel_distance) << ','
          << num(r.totals.fuel_consumption) << ',';
      if (r.defined) {
        out << num(r.metrics.average_fuel_rate) << ',' << num(r.metrics.fuel_efficiency) << ','
            << num(r.metrics.average_speed) << ','
            << (lead ? "0" : num(r.metrics.efficiency_improvement_vs_leading));
      } else {
        out << ",,,";
      }
      out << ',' << r.totals.constraint_violations << '\n';
    }
  };
  write_table(directory / "comprehensive.csv", report.comprehensive, false);
  write_table(directory / "comprehensive_by_road.csv", report.by_road, true);

  {
    std::ofstream out = open_out(directory / "nlp_vs_qp.csv");
    out << "vehicle,horizon_s,slope_prediction,road,qp_agent,nlp_agent,speed_loss_pct,"
           "efficiency_improvement_pct\n";
    for (const auto & c : report.nlp_vs_qp) {
      out << c.vehicle << ',' << num(c.horizon_s) << ',' << (c.slope_prediction ? "true" : "false")
          << ',' << field(c.road) << ',' << field(c.qp_agent) << ',' << field(c.nlp_agent) << ','
          << num(c.speed_loss_pct) << ',' << num(c.efficiency_improvement_pct) << '\n';
    }
  }

  {
    std::ofstream out = open_out(directory / "episodes.csv");
    out << "agent,vehicle,method,horizon_s,slope_prediction,cycle,road,completed,failed_step,"
           "failure,failure_row,travel_time_s,travel_distance_m,fuel_consumption_ml,"
           "fuel_efficiency_l_100km,leader_travel_distance_m,leader_fuel_consumption_ml,"
           "constraint_violations,engine_map_fallbacks,min_plan_fuel_rate_ml_s\n";
    for (const auto & e : report.episodes) {
      const double eff = e.totals.travel_distance > 0.0
                           ? e.totals.fuel_consumption * 100.0 / e.totals.travel_distance
                           : 0.0;
      out << field(e.agent) << ',' << e.vehicle << ',' << to_string(e.combo.method) << ','
          << num(e.combo.horizon_s) << ',' << (e.combo.slope_prediction ? "true" : "false") << ','
          << field(e.cycle) << ',' << field(e.road) << ',' << (e.completed ? "true" : "false")
          << ',' << e.failed_step << ',' << field(e.failure) << ',' << field(e.failure_row) << ','
          << num(e.totals.travel_time) << ',' << num(e.totals.travel_distance) << ','
          << num(e.totals.fuel_consumption) << ',' << num(eff) << ','
          << num(e.leader_totals.travel_distance) << ',' << num(e.leader_totals.fuel_consumption)
          << ',' << e.totals.constraint_violations << ',' << e.engine_map_fallbacks << ','
          << (e.combo.method == Method::kQp ? "" : num(e.min_plan_fuel_rate)) << '\n';
    }
  }

  {
    // Wall-clock numbers live here only, so the other files stay reproducible.
    std::ofstream out = open_out(directory / "timing.csv");
    out << "agent,vehicle,method,horizon_s,slope_prediction,solves,average_solve_ms,"
           "multiple_vs_qp\n";
    for (const auto & r : report.comprehensive) {
      if (r.method == "leader") {
        continue;
      }
      std::string multiple;
      for (const auto & c : report.nlp_vs_qp) {
        if (c.road == "all" && c.nlp_agent == r.agent) {
          multiple = num(c.solve_time_multiple);
        }
      }
      if (r.method == "qp") {
        multiple = "1";
      }
      out << field(r.agent) << ',' << r.vehicle << ',' << r.method << ',' << num(r.horizon_s) << ','
          << (r.slope_prediction ? "true" : "false") << ',' << r.totals.solve_count << ','
          << num(r.metrics.average_solve_time) << ',' << multiple << '\n';
    }
  }
}

std::string sha256_file(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, fmt::format("cannot read {}", path.string()));
  }
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 initialization failed");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) {
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += fmt::format("{:02x}", md[i]);
  }
  return hex;
}

nlohmann::json fit_document(const FitResult & fit, const nlohmann::json & provenance)
{
  nlohmann::json doc = to_json(fit.coeffs);
  doc["fit_report"] = {
    {"sample_count", fit.report.sample_count},
    {"mean_abs_error", fit.report.mean_abs_error},
    {"rms_error", fit.report.rms_error},
    {"restricted_mean_abs_error", fit.report.restricted_mean_abs_error},
    {"restricted_count", fit.report.restricted_count}};
  doc["provenance"] = provenance;
  return doc;
}

void write_plot_data(
  const std::vector<PlotInput> & egos, const TrajectoryLog * leader, const SlopeProfile & road,
  const fs::path & path)
{
  // Elevation follows the first ego path, or the leader when no ego log is given.
  const TrajectoryLog * path_log = !egos.empty() ? &egos[0].log : leader;
  std::size_t rows = leader != nullptr ? leader->rows.size() : 0;
  for (const auto & e : egos) {
    rows = std::max(rows, e.log.rows.size());
  }
  std::ofstream out = open_out(path);
  out << "t,elevation_m";
  if (leader != nullptr) {
    out << ",v_leader,fuel_leader";
  }
  for (const auto & e : egos) {
    out << ",v_" << e.label << ",fuel_" << e.label;
  }
  out << '\n';

  std::optional<ElevationTracker> elevation;
  if (path_log != nullptr && !path_log->rows.empty()) {
    elevation.emplace(road, path_log->rows.front().s);
  }
  double dt = path_log != nullptr ? path_log->dt : 0.1;
  for (const auto & e : egos) {
    if (e.log.rows.size() >= 2) {
      dt = e.log.dt;
      break;
    }
  }
  for (std::size_t k = 0; k < rows; ++k) {
    double t = static_cast<double>(k) * dt;
    std::string elev;
    if (path_log != nullptr && k < path_log->rows.size()) {
      t = path_log->rows[k].t;
      elev = num(elevation->advance_to(path_log->rows[k].s));
    }
    out << num(t) << ',' << elev;
    auto put = [&](const TrajectoryLog & log) {
      if (k < log.rows.size()) {
        out << ',' << num(log.rows[k].v) << ',' << num(log.rows[k].fuel_cum);
      } else {
        out << ",,";
      }
    };
    if (leader != nullptr) {
      put(*leader);
    }
    for (const auto & e : egos) {
      put(e.log);
    }
    out << '\n';
  }
}

}  // namespace ecotraj
