# Copyright 2026 The ecotraj Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python access to the ecotraj eco-driving trajectory optimizer."""

import json as _json

from . import _ecotraj
from ._ecotraj import EcotrajError, derived_coeffs, elevation_at, sha256_file, slope_at

__all__ = [
    "EcotrajError",
    "derived_coeffs",
    "elevation_at",
    "fit_map",
    "fuel_preset",
    "fuel_rate",
    "metrics",
    "run_episode",
    "scenario_round_trip",
    "sha256_file",
    "slope_at",
    "write_bundled_data",
]


def fuel_preset(name):
    """Tabulated fuel coefficients of a vehicle preset as a dict (o0..o4, c0..c2)."""
    return _json.loads(_ecotraj.fuel_preset_json(name))


def fuel_rate(v, u, coefficients="truck"):
    """Fuel rate in ml/s; `coefficients` is a preset name or a coefficient dict."""
    if isinstance(coefficients, str):
        coefficients = fuel_preset(coefficients)
    return _ecotraj.fuel_rate(v, u, _json.dumps(coefficients))


def fit_map(vehicle="truck", map_csv="", torque_limit_csv=""):
    """Fit the fuel polynomial to an engine map (the built-in synthetic map by default)."""
    return _json.loads(_ecotraj.fit_map_json(vehicle, str(map_csv), str(torque_limit_csv)))


def metrics(fuel_ml, distance_m, time_s, leader=None):
    """Derived episode metrics; `leader` is an optional (fuel, distance, time) tuple."""
    return _json.loads(_ecotraj.metrics_json(fuel_ml, distance_m, time_s, leader))


def run_episode(vehicle="truck", method="qp", horizon=5.0, cycle="synthetic_urban",
                road="flat", slope_prediction=True, coefficients=None):
    """Run one car-following episode and return metrics plus speed/gap/fuel series."""
    coeffs = "" if coefficients is None else _json.dumps(coefficients)
    return _json.loads(_ecotraj.episode_json(
        vehicle, method, float(horizon), str(cycle), road, slope_prediction, coeffs))


def scenario_round_trip(text):
    """Parse a scenario TOML document and serialize it back."""
    return _ecotraj.scenario_round_trip(text)


def write_bundled_data(directory):
    """Regenerate the synthetic cycle and engine-map CSVs under `directory`."""
    _ecotraj.write_bundled_data(str(directory))
