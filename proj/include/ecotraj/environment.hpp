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

#ifndef ECOTRAJ__ENVIRONMENT_HPP_
#define ECOTRAJ__ENVIRONMENT_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecotraj
{

struct SlopeComponent
{
  double amplitude = 0.0;   // rad
  double wavelength = 1.0;  // m

  bool operator==(const SlopeComponent &) const = default;
};

/// Road grade as a constant plus a mixture of sine waves along the path coordinate.
struct SlopeProfile
{
  std::string name = "flat";
  double theta0 = 0.0;  // rad
  std::vector<SlopeComponent> components;
  double h0 = 0.0;      // m

  void validate() const;
  bool operator==(const SlopeProfile &) const = default;

  static SlopeProfile flat();
  static SlopeProfile rolling();
  static SlopeProfile steep();
  /// "flat", "rolling" or "steep".
  static SlopeProfile named(std::string_view name);
};

double slope_at(double s, const SlopeProfile & profile);

/// Elevation relative to `origin`: h0 + integral of tan(theta) from origin to s
/// (composite trapezoid, step <= 1 m).
double elevation_at(double s, const SlopeProfile & profile, double origin = 0.0);

/// Incremental elevation for a non-decreasing sequence of query points.
class ElevationTracker
{
public:
  explicit ElevationTracker(const SlopeProfile & profile, double origin = 0.0);
  double advance_to(double s);

private:
  const SlopeProfile * profile_;
  double position_;
  double height_;
};

/// Leading-agent time series resampled to the simulation step.
struct DrivingCycle
{
  std::string name;
  double timestep = 0.1;             // s
  std::vector<double> speed;         // m/s
  std::vector<double> distance;      // m, cumulative trapezoid
  std::vector<double> acceleration;  // m/s^2, forward difference (last repeats)

  std::size_t size() const { return speed.size(); }
  double duration() const;
};

/// Builds a cycle from raw (time, speed) samples, resampled linearly to `dt`.
/// Throws Error(kInvalidArgument) for negative speeds or a non-increasing time column.
DrivingCycle make_driving_cycle(
  std::string name, std::span<const double> time, std::span<const double> speed, double dt);

/// Reads a `time_s,speed_m_s` CSV.
DrivingCycle load_driving_cycle(const std::filesystem::path & path, double dt);

/// Concatenates `count` copies of a cycle end to end.
DrivingCycle repeat_cycle(const DrivingCycle & cycle, int count);

/// Deterministic stand-ins for a highway and an urban dynamometer cycle, sampled at 1 Hz.
struct RawCycle
{
  std::string name;
  std::vector<double> time;
  std::vector<double> speed;
};
RawCycle synthetic_highway_cycle();
RawCycle synthetic_urban_cycle();
void save_raw_cycle(const RawCycle & cycle, const std::filesystem::path & path);

struct LeadState
{
  double s = 0.0;
  double v = 0.0;
  double a = 0.0;
};

struct LeadPrediction
{
  std::vector<double> s;
  std::vector<double> v;
  std::vector<double> a;
};

/// Constant-acceleration rollout over `steps` intervals with speed clamped at zero.
LeadPrediction predict_leading(const LeadState & lead, int steps, double dt);

/// Element-wise slope over a path-coordinate reference.
std::vector<double> predict_slope_sequence(std::span<const double> s_ref, const SlopeProfile & profile);

/// Slope-blind prediction: the current slope repeated over all nodes.
std::vector<double> current_slope_sequence(double s_now, int steps, const SlopeProfile & profile);

/// First-iteration reference: leader positions shifted back by d_init.
std::vector<double> initial_slope_reference(std::span<const double> lead_s, double d_init);

/// Previous ego plan shifted by one step with the last element repeated.
std::vector<double> shifted_slope_reference(std::span<const double> previous_s);

}  // namespace ecotraj

#endif  // ECOTRAJ__ENVIRONMENT_HPP_
