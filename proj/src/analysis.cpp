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

#include "nettest/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace nettest {

namespace {

double median_lower_double(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median of empty set");
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

void require_same_grid(const RateCurve& a, const RateCurve& b) {
  if (a.grid_step_ns != b.grid_step_ns || a.size() != b.size()) {
    throw SchemaError("curves are not on the same grid");
  }
}

}  // namespace

RateCurve median_curve(const CurveCollection& collection) {
  if (collection.curves.empty()) {
    throw ConfigError("median of an empty curve collection");
  }
  const RateCurve& first = collection.curves.front();
  for (const auto& c : collection.curves) require_same_grid(first, c);

  RateCurve median;
  median.grid_step_ns = first.grid_step_ns;
  median.t_star_ns = first.t_star_ns;
  median.rate_bytes_per_s.reserve(first.size());
  std::vector<double> column(collection.curves.size());
  for (size_t i = 0; i < first.size(); ++i) {
    for (size_t c = 0; c < collection.curves.size(); ++c) {
      column[c] = collection.curves[c].rate_bytes_per_s[i];
    }
    median.rate_bytes_per_s.push_back(median_lower_double(column));
  }
  return median;
}

std::vector<double> saturation_fractions(const RateCurve& curve,
                                         int64_t saturation_t_ns,
                                         std::span<const int64_t> checkpoints) {
  auto index_of = [&](int64_t t) -> size_t {
    if (curve.grid_step_ns <= 0 || t % curve.grid_step_ns != 0) {
      throw ConfigError("time " + std::to_string(t) + " ns is off-grid");
    }
    int64_t k = t / curve.grid_step_ns;
    if (k < 1 || static_cast<size_t>(k) > curve.size()) {
      throw ConfigError("time " + std::to_string(t) + " ns outside the curve");
    }
    return static_cast<size_t>(k - 1);
  };
  double saturation = curve.rate_bytes_per_s[index_of(saturation_t_ns)];
  if (saturation <= 0) {
    throw ConfigError("saturation rate is zero; fractions undefined");
  }
  std::vector<double> fractions;
  fractions.reserve(checkpoints.size());
  for (int64_t t : checkpoints) {
    fractions.push_back(100.0 * curve.rate_bytes_per_s[index_of(t)] /
                        saturation);
  }
  return fractions;
}

CurveDistance curve_distance(const RateCurve& a, const RateCurve& b,
                             double normalizer) {
  require_same_grid(a, b);
  if (normalizer <= 0) throw ConfigError("normalizer must be positive");
  double sum_sq = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a.rate_bytes_per_s[i] - b.rate_bytes_per_s[i];
    sum_sq += d * d;
  }
  CurveDistance dist;
  dist.raw = std::sqrt(sum_sq);
  dist.percent =
      100.0 * dist.raw / (normalizer * std::sqrt(static_cast<double>(a.size())));
  return dist;
}

double curve_median_value(const RateCurve& curve) {
  return median_lower_double(curve.rate_bytes_per_s);
}

std::vector<TimeOfDayRow> timeofday_export(std::vector<TimedRate> runs,
                                           std::optional<int> bucket_minutes) {
  if (runs.empty()) throw ConfigError("no runs to export");
  std::sort(runs.begin(), runs.end(),
            [](const TimedRate& a, const TimedRate& b) {
              return a.start_ns < b.start_ns;
            });
  int64_t t0 = runs.front().start_ns;
  std::vector<TimeOfDayRow> rows;
  if (!bucket_minutes) {
    rows.reserve(runs.size());
    for (const auto& r : runs) {
      rows.push_back(
          {static_cast<double>(r.start_ns - t0) / (3600.0 * kNanosPerSecond),
           r.rate_bps});
    }
    return rows;
  }
  int64_t bucket_ns = static_cast<int64_t>(*bucket_minutes) * 60 *
                      kNanosPerSecond;
  if (bucket_ns <= 0) throw ConfigError("bucket must be positive");
  size_t i = 0;
  while (i < runs.size()) {
    int64_t bucket_index = (runs[i].start_ns - t0) / bucket_ns;
    double sum = 0.0;
    int count = 0;
    while (i < runs.size() &&
           (runs[i].start_ns - t0) / bucket_ns == bucket_index) {
      sum += runs[i].rate_bps;
      ++count;
      ++i;
    }
    double mid_hour = (static_cast<double>(bucket_index) + 0.5) * bucket_ns /
                      (3600.0 * kNanosPerSecond);
    rows.push_back({mid_hour, sum / count});
  }
  return rows;
}

double autocorrelation_peak_lag_hours(std::span<const TimeOfDayRow> rows,
                                      double min_lag_h, double max_lag_h) {
  if (rows.size() < 8) throw ConfigError("too few rows for autocorrelation");
  // Assumes near-uniform spacing, which bucketed exports provide.
  double step_h =
      (rows.back().relative_hour - rows.front().relative_hour) /
      static_cast<double>(rows.size() - 1);
  if (step_h <= 0) throw ConfigError("rows are not time-ordered");

  double mean = 0.0;
  for (const auto& r : rows) mean += r.rate_bps;
  mean /= static_cast<double>(rows.size());

  double var = 0.0;
  for (const auto& r : rows) {
    var += (r.rate_bps - mean) * (r.rate_bps - mean);
  }
  if (var <= 0) throw ConfigError("rate series is constant");

  int min_lag = std::max(1, static_cast<int>(std::ceil(min_lag_h / step_h)));
  int max_lag = std::min(static_cast<int>(rows.size()) - 2,
                         static_cast<int>(std::floor(max_lag_h / step_h)));
  if (min_lag > max_lag) throw ConfigError("lag window is empty");

  double best_value = -2.0;
  int best_lag = min_lag;
  for (int lag = min_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (size_t i = 0; i + lag < rows.size(); ++i) {
      acc += (rows[i].rate_bps - mean) * (rows[i + lag].rate_bps - mean);
    }
    double value = acc / var;
    if (value > best_value) {
      best_value = value;
      best_lag = lag;
    }
  }
  return best_lag * step_h;
}

}  // namespace nettest
