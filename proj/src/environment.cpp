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

#include "ecotraj/environment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "ecotraj/csv.hpp"
#include "ecotraj/error.hpp"

namespace ecotraj
{

void SlopeProfile::validate() const
{
  double total = std::abs(theta0);
  for (const auto & c : components) {
    if (!(c.wavelength > 0.0)) {
      throw Error(
        ErrorCode::kInvalidArgument,
        fmt::format("slope profile '{}': wavelengths must be positive", name));
    }
    total += std::abs(c.amplitude);
  }
  if (!(total < std::numbers::pi / 2.0)) {
    throw Error(
      ErrorCode::kInvalidArgument,
      fmt::format("slope profile '{}': |theta0| + sum|a_g| must stay below pi/2", name));
  }
}

SlopeProfile SlopeProfile::flat() { return {"flat", 0.0, {}, 0.0}; }

SlopeProfile SlopeProfile::rolling()
{
  return {"rolling", 0.0, {{0.04, 2870.0}, {0.02, 2136.0}}, 0.0};
}

SlopeProfile SlopeProfile::steep()
{
  return {"steep", 0.02, {{0.05, 2380.0}, {0.02, 1860.0}, {0.01, 1430.0}}, 0.0};
}

SlopeProfile SlopeProfile::named(std::string_view name)
{
  if (name == "flat") {
    return flat();
  }
  if (name == "rolling") {
    return rolling();
  }
  if (name == "steep") {
    return steep();
  }
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown road profile '{}'", name));
}

double slope_at(double s, const SlopeProfile & profile)
{
  double theta = profile.theta0;
  for (const auto & c : profile.components) {
    theta += c.amplitude * std::sin(2.0 * std::numbers::pi * s / c.wavelength);
  }
  return theta;
}

namespace
{
double integrate_tan(const SlopeProfile & profile, double from, double to)
{
  const double span = to - from;
  if (span == 0.0) {
    return 0.0;
  }
  const auto steps = static_cast<long>(std::ceil(std::abs(span)));
  const double h = span / static_cast<double>(steps);
  double sum = 0.5 * (std::tan(slope_at(from, profile)) + std::tan(slope_at(to, profile)));
  for (long i = 1; i < steps; ++i) {
    sum += std::tan(slope_at(from + h * static_cast<double>(i), profile));
  }
  return sum * h;
}
}  // namespace

double elevation_at(double s, const SlopeProfile & profile, double origin)
{
  return profile.h0 + integrate_tan(profile, origin, s);
}

ElevationTracker::ElevationTracker(const SlopeProfile & profile, double origin)
: profile_(&profile), position_(origin), height_(profile.h0)
{
}

double ElevationTracker::advance_to(double s)
{
  if (s < position_) {
    throw Error(ErrorCode::kInvalidArgument, "elevation queries must be non-decreasing");
  }
  // Whole-metre panels from the origin, plus one partial panel up to s.
  while (position_ + 1.0 <= s) {
    height_ += integrate_tan(*profile_, position_, position_ + 1.0);
    position_ += 1.0;
  }
  return height_ + integrate_tan(*profile_, position_, s);
}

// ---------------------------------------------------------------------------

double DrivingCycle::duration() const
{
  return speed.empty() ? 0.0 : timestep * static_cast<double>(speed.size() - 1);
}

DrivingCycle make_driving_cycle(
  std::string name, std::span<const double> time, std::span<const double> speed, double dt)
{
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cycle timestep must be positive");
  }
  if (time.size() != speed.size() || time.size() < 2) {
    throw Error(
      ErrorCode::kInvalidArgument,
      fmt::format("cycle '{}' needs >= 2 matching time/speed samples", name));
  }
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (!(speed[i] >= 0.0)) {
      throw Error(
        ErrorCode::kInvalidArgument,
        fmt::format("cycle '{}': negative speed {} at t = {}", name, speed[i], time[i]));
    }
    if (i > 0 && !(time[i] > time[i - 1])) {
      throw Error(
        ErrorCode::kInvalidArgument,
        fmt::format("cycle '{}': time column not increasing at t = {}", name, time[i]));
    }
  }

  DrivingCycle cycle;
  cycle.name = std::move(name);
  cycle.timestep = dt;
  const double span = time.back() - time.front();
  const auto steps = static_cast<std::size_t>(std::floor(span / dt + 1e-9));
  cycle.speed.resize(steps + 1);
  std::size_t k = 0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = time.front() + dt * static_cast<double>(i);
    while (k + 2 < time.size() && time[k + 1] <= t) {
      ++k;
    }
    const double w = std::clamp((t - time[k]) / (time[k + 1] - time[k]), 0.0, 1.0);
    cycle.speed[i] = (1.0 - w) * speed[k] + w * speed[k + 1];
  }
  cycle.distance.assign(cycle.speed.size(), 0.0);
  cycle.acceleration.assign(cycle.speed.size(), 0.0);
  for (std::size_t i = 1; i < cycle.speed.size(); ++i) {
    cycle.distance[i] = cycle.distance[i - 1] + 0.5 * (cycle.speed[i - 1] + cycle.speed[i]) * dt;
    cycle.acceleration[i - 1] = (cycle.speed[i] - cycle.speed[i - 1]) / dt;
  }
  if (cycle.speed.size() >= 2) {
    cycle.acceleration.back() = cycle.acceleration[cycle.speed.size() - 2];
  }
  return cycle;
}

DrivingCycle load_driving_cycle(const std::filesystem::path & path, double dt)
{
  const auto table = csv::read(path);
  if (table.header.size() != 2 || table.header[0] != "time_s" || table.header[1] != "speed_m_s") {
    throw Error(ErrorCode::kParse, path.string() + ": header must be 'time_s,speed_m_s'");
  }
  std::vector<double> time;
  std::vector<double> speed;
  for (const auto & row : table.rows) {
    if (row.size() != 2) {
      throw Error(ErrorCode::kParse, path.string() + ": every row needs two columns");
    }
    time.push_back(csv::to_double(row[0], path.string()));
    speed.push_back(csv::to_double(row[1], path.string()));
  }
  return make_driving_cycle(path.stem().string(), time, speed, dt);
}

DrivingCycle repeat_cycle(const DrivingCycle & cycle, int count)
{
  if (count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "cycle repeat count must be >= 1");
  }
  if (count == 1) {
    return cycle;
  }
  DrivingCycle out;
  out.name = fmt::format("{}x{}", cycle.name, count);
  out.timestep = cycle.timestep;
  const double dt = cycle.timestep;
  for (int r = 0; r < count; ++r) {
    const std::size_t first = r == 0 ? 0 : 1;  // shared boundary sample
    for (std::size_t i = first; i < cycle.size(); ++i) {
      out.speed.push_back(cycle.speed[i]);
    }
  }
  out.distance.assign(out.speed.size(), 0.0);
  out.acceleration.assign(out.speed.size(), 0.0);
  for (std::size_t i = 1; i < out.speed.size(); ++i) {
    out.distance[i] = out.distance[i - 1] + 0.5 * (out.speed[i - 1] + out.speed[i]) * dt;
    out.acceleration[i - 1] = (out.speed[i] - out.speed[i - 1]) / dt;
  }
  out.acceleration.back() = out.acceleration[out.speed.size() - 2];
  return out;
}

namespace
{
// Speed through (time, speed) waypoints with cosine easing between consecutive points.
RawCycle eased_cycle(std::string name, const std::vector<std::pair<double, double>> & points)
{
  RawCycle raw;
  raw.name = std::move(name);
  const double end = points.back().first;
  std::size_t k = 0;
  for (int t = 0; t <= static_cast<int>(end); ++t) {
    while (k + 2 < points.size() && points[k + 1].first <= t) {
      ++k;
    }
    const auto [t0, v0] = points[k];
    const auto [t1, v1] = points[k + 1];
    const double tau = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
    const double v = v0 + (v1 - v0) * 0.5 * (1.0 - std::cos(std::numbers::pi * tau));
    raw.time.push_back(static_cast<double>(t));
    // Round to the centimetre per second, as in published cycle tables.
    raw.speed.push_back(std::round(v * 100.0) / 100.0);
  }
  return raw;
}
}  // namespace

RawCycle synthetic_highway_cycle()
{
  return eased_cycle(
    "synthetic_highway", {{0, 0},     {40, 20},   {100, 24},  {160, 21},  {220, 26},
                          {280, 26},  {330, 16},  {380, 16},  {430, 24},  {520, 22},
                          {570, 25},  {620, 0}});
}

RawCycle synthetic_urban_cycle()
{
  return eased_cycle(
    "synthetic_urban", {{0, 0},    {15, 8},    {35, 12},   {55, 0},    {65, 0},
                        {80, 10},  {110, 14},  {130, 6},   {150, 11},  {175, 0},
                        {190, 0},  {210, 9},   {240, 13},  {260, 13},  {285, 0},
                        {300, 0},  {320, 12},  {350, 15},  {375, 7},   {400, 0}});
}

void save_raw_cycle(const RawCycle & cycle, const std::filesystem::path & path)
{
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  out << "time_s,speed_m_s\n";
  for (std::size_t i = 0; i < cycle.time.size(); ++i) {
    out << csv::format(cycle.time[i]) << ',' << csv::format(cycle.speed[i]) << '\n';
  }
}

// ---------------------------------------------------------------------------

LeadPrediction predict_leading(const LeadState & lead, int steps, double dt)
{
  if (steps < 1) {
    throw Error(ErrorCode::kInvalidArgument, "prediction horizon must have >= 1 step");
  }
  LeadPrediction p;
  p.s.resize(steps + 1);
  p.v.resize(steps + 1);
  p.a.resize(steps + 1);
  p.s[0] = lead.s;
  p.v[0] = lead.v;
  p.a[0] = lead.a;
  for (int i = 0; i < steps; ++i) {
    p.v[i + 1] = std::max(0.0, p.v[i] + lead.a * dt);
    p.s[i + 1] = p.s[i] + 0.5 * (p.v[i] + p.v[i + 1]) * dt;
    p.a[i + 1] = p.v[i + 1] > 0.0 ? lead.a : std::max(0.0, lead.a);
  }
  return p;
}

std::vector<double> predict_slope_sequence(std::span<const double> s_ref, const SlopeProfile & profile)
{
  std::vector<double> g(s_ref.size());
  std::transform(s_ref.begin(), s_ref.end(), g.begin(), [&](double s) {
    return slope_at(s, profile);
  });
  return g;
}

std::vector<double> current_slope_sequence(double s_now, int steps, const SlopeProfile & profile)
{
  return std::vector<double>(static_cast<std::size_t>(steps) + 1, slope_at(s_now, profile));
}

std::vector<double> initial_slope_reference(std::span<const double> lead_s, double d_init)
{
  std::vector<double> ref(lead_s.size());
  std::transform(lead_s.begin(), lead_s.end(), ref.begin(), [&](double s) { return s - d_init; });
  return ref;
}

std::vector<double> shifted_slope_reference(std::span<const double> previous_s)
{
  std::vector<double> ref(previous_s.begin(), previous_s.end());
  if (ref.size() >= 2) {
    std::rotate(ref.begin(), ref.begin() + 1, ref.end());
    ref.back() = previous_s.back();
  }
  return ref;
}

}  // namespace ecotraj
