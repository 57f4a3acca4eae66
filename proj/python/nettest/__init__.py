# Copyright 2026 The Nettest Authors.
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

"""Python access to the nettest measurement toolkit.

Wraps the `_nettest` extension: protocol line parsing, exact multi-flow
rate aggregation, rate-curve analysis, batch grid expansion and run
directory loading.
"""

from _nettest import (  # noqa: F401
    DEFAULT_GRID_STEP_NS,
    ConfigError,
    ControlMessage,
    CurveCollection,
    CurveDistance,
    FlowPolicy,
    FlowSample,
    FlowSeries,
    IoError,
    MessageKind,
    ProtocolError,
    RateCurve,
    RateResult,
    SchemaError,
    TimedRate,
    TimeOfDayRow,
    autocorrelation_peak_lag_hours,
    compute_rate,
    compute_t_star,
    curve_distance,
    curve_median_value,
    expand_batch,
    interpolate_bytes,
    load_run,
    median_curve,
    parse_message,
    resample_curve,
    saturation_fractions,
    serialize_message,
    timeofday_export,
)

__all__ = [
    "DEFAULT_GRID_STEP_NS",
    "ConfigError",
    "ControlMessage",
    "CurveCollection",
    "CurveDistance",
    "FlowPolicy",
    "FlowSample",
    "FlowSeries",
    "IoError",
    "MessageKind",
    "ProtocolError",
    "RateCurve",
    "RateResult",
    "SchemaError",
    "TimedRate",
    "TimeOfDayRow",
    "autocorrelation_peak_lag_hours",
    "compute_rate",
    "compute_t_star",
    "curve_distance",
    "curve_median_value",
    "expand_batch",
    "interpolate_bytes",
    "load_run",
    "median_curve",
    "parse_message",
    "resample_curve",
    "saturation_fractions",
    "serialize_message",
    "timeofday_export",
]
