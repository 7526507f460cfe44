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


#ifndef ECOTRAJ__EXPERIMENT_HPP_
#define ECOTRAJ__EXPERIMENT_HPP_

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecotraj/fuel_model.hpp"
#include "ecotraj/scenario.hpp"
#include "ecotraj/sim.hpp"

namespace ecotraj
{

/// One cell of the run matrix (indices into the scenario lists).
struct Combination
{
  std::size_t vehicle = 0;
  std::size_t cycle = 0;
  std::size_t road = 0;
  Method method = Method::kQp;
  double horizon_s = 5.0;
  bool slope_prediction = true;
};

/// Order: vehicle, slope-prediction flag, horizon, method, cycle, road.
std::vector<Combination> enumerate_combinations(const ScenarioConfig & config);

struct EpisodeRecord
{
  Combination combo;
  std::string vehicle;  // "Truck"
  std::string agent;    // "Truck-NLP-5F"
  std::string leader;   // "Truck-L"
  std::string cycle;
  std::string road;
  RunTotals totals;
  RunTotals leader_totals;
  bool completed = false;
  int failed_step = -1;
  std::string failure;
  std::string failure_row;
  int engine_map_fallbacks = 0;
  double min_plan_fuel_rate = 0.0;
};

/// Sum-then-derive aggregate of several episodes.
struct AggregateRow
{
  std::string agent;
  std::string vehicle;
  std::string method;  // "leader" for the leading agent
  double horizon_s = 0.0;
  bool slope_prediction = true;
  std::string road;    // "all" or a road name
  RunTotals totals;
  EpisodeMetrics metrics;
  bool defined = false;  // false when the summed distance or time is zero
};

/// NLP against QP at equal vehicle, horizon, flag and road scope.
struct ComparisonRow
{
  std::string vehicle;
  double horizon_s = 0.0;
  bool slope_prediction = true;
  std::string road;
  std::string qp_agent;
  std::string nlp_agent;
  double speed_loss_pct = 0.0;
  double efficiency_improvement_pct = 0.0;
  double solve_time_multiple = 0.0;  // wall clock, reported only in timing.csv
};

struct MatrixReport
{
  std::vector<EpisodeRecord> episodes;
  std::vector<AggregateRow> comprehensive;
  std::vector<AggregateRow> by_road;
  std::vector<ComparisonRow> nlp_vs_qp;

  bool all_completed() const;
  /// Gap violations over completed QP and NLP episodes.
  long safety_violations() const;
};

/// Builds the aggregate tables from per-episode records.
MatrixReport aggregate(std::vector<EpisodeRecord> episodes);

struct MatrixOptions
{
  int workers = 1;
  /// Per-episode trajectory logs and metrics JSON go here when non-empty.
  std::filesystem::path log_directory;
  /// Called after each finished episode (from worker threads, serialized).
  std::function<void(const EpisodeRecord &, std::size_t done, std::size_t total)> progress;
};

/// ECO_TRAJ_WORKERS if set and positive, else the hardware concurrency.
int default_worker_count();

EpisodeConfig episode_config(
  const ScenarioConfig & config, const Combination & combo, const ResolvedVehicle & vehicle,
  const DrivingCycle & cycle);

MatrixReport run_matrix(const ScenarioConfig & config, const MatrixOptions & options = {});

/// comprehensive.csv, comprehensive_by_road.csv, nlp_vs_qp.csv, episodes.csv, timing.csv.
void write_matrix_outputs(const MatrixReport & report, const std::filesystem::path & directory);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path & path);

/// Coefficients plus provenance and fit statistics, readable by load_fuel_coefficients.
nlohmann::json fit_document(
  const FitResult & fit, const nlohmann::json & provenance);

struct PlotInput
{
  std::string label;
  TrajectoryLog log;
};

/// Time-indexed series for speed, elevation and cumulative fuel panels. Elevation
/// follows the first ego path, or the leader path when no ego log is given.
void write_plot_data(
  const std::vector<PlotInput> & egos, const TrajectoryLog * leader, const SlopeProfile & road,
  const std::filesystem::path & path);

}  // namespace ecotraj

#endif  // ECOTRAJ__EXPERIMENT_HPP_
