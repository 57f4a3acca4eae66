// Copyright 2026 The Nettest Authors.
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

#ifndef NETTEST_ANALYSIS_HPP
#define NETTEST_ANALYSIS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nettest/rate.hpp"

namespace nettest {

/// Rate curves from repeated runs of one configuration group, all on the
/// same grid.
struct CurveCollection {
  std::string group_key;
  std::vector<RateCurve> curves;
  int excluded_short_curves = 0;  // shorter than the horizon, not padded
};

/// Pointwise median across the collection (lower-of-two for even counts).
/// Throws ConfigError on an empty collection, SchemaError on mismatched
/// grids.
RateCurve median_curve(const CurveCollection& collection);

/// For each checkpoint t: 100 * R(t) / R(saturation_t). Checkpoints and
/// the saturation time must lie on the curve grid.
std::vector<double> saturation_fractions(const RateCurve& curve,
                                         int64_t saturation_t_ns,
                                         std::span<const int64_t> checkpoints);

struct CurveDistance {
  double percent = 0.0;   // RMS form, normalized by `normalizer`
  double raw = 0.0;       // plain Euclidean distance, for transparency
};

/// Euclidean distance between two curves on a shared grid, reported as
/// 100 * sqrt(sum (a_i-b_i)^2) / (normalizer * sqrt(N)) so the percentage
/// does not depend on grid density. `normalizer` is typically the median
/// value of the reference curve.
CurveDistance curve_distance(const RateCurve& a, const RateCurve& b,
                             double normalizer);

/// Median of a curve's values (lower-of-two), the usual normalizer for
/// curve_distance.
double curve_median_value(const RateCurve& curve);

struct TimedRate {
  int64_t start_ns = 0;  // wall-clock (or virtual) start of the run
  double rate_bps = 0.0;
};

struct TimeOfDayRow {
  double relative_hour = 0.0;
  double rate_bps = 0.0;
};

/// Rate-vs-relative-time table for daily-pattern inspection. Rows are
/// ordered by time; with a bucket, rates within each bucket are averaged.
std::vector<TimeOfDayRow> timeofday_export(std::vector<TimedRate> runs,
                                           std::optional<int> bucket_minutes =
                                               std::nullopt);

/// Lag (hours) of the autocorrelation peak of an evenly sampled rate
/// series, searched in [min_lag_h, max_lag_h]. Used to detect daily
/// periodicity.
double autocorrelation_peak_lag_hours(std::span<const TimeOfDayRow> rows,
                                      double min_lag_h, double max_lag_h);

}  // namespace nettest

#endif  // NETTEST_ANALYSIS_HPP
