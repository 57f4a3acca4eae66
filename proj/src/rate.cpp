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

#include "nettest/rate.hpp"

#include <algorithm>
#include <string>

namespace nettest {

void FlowSeries::validate() const {
  int64_t prev_t = 0;
  int64_t prev_b = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].t_ns <= prev_t) {
      throw ConfigError("flow " + std::to_string(flow_id) +
                        ": non-increasing timestamp at sample " +
                        std::to_string(i));
    }
    if (samples[i].bytes < prev_b) {
      throw ConfigError("flow " + std::to_string(flow_id) +
                        ": decreasing byte count at sample " +
                        std::to_string(i));
    }
    prev_t = samples[i].t_ns;
    prev_b = samples[i].bytes;
  }
}

int64_t compute_t_star(std::span<const FlowSeries> series) {
  if (series.empty()) throw ConfigError("no flows");
  int64_t t_star = series[0].last_t_ns();
  for (const auto& s : series) {
    if (s.samples.empty()) {
      throw ConfigError("flow " + std::to_string(s.flow_id) +
                        ": empty series");
    }
    t_star = std::min(t_star, s.last_t_ns());
  }
  return t_star;
}

double interpolate_bytes(const FlowSeries& series, int64_t t_star_ns) {
  if (t_star_ns <= 0) throw ConfigError("t* must be positive");
  if (series.samples.empty() || t_star_ns > series.last_t_ns()) {
    throw ConfigError("t* beyond the end of flow " +
                      std::to_string(series.flow_id));
  }
  // First sample with t >= t*; the segment below it starts at the previous
  // sample or the implicit (0, 0).
  auto it = std::lower_bound(
      series.samples.begin(), series.samples.end(), t_star_ns,
      [](const FlowSample& s, int64_t t) { return s.t_ns < t; });
  FlowSample upper = *it;
  FlowSample lower =
      (it == series.samples.begin()) ? FlowSample{0, 0} : *(it - 1);
  if (upper.t_ns == t_star_ns) return static_cast<double>(upper.bytes);
  double frac = static_cast<double>(t_star_ns - lower.t_ns) /
                static_cast<double>(upper.t_ns - lower.t_ns);
  return static_cast<double>(lower.bytes) +
         frac * static_cast<double>(upper.bytes - lower.bytes);
}

namespace {

std::vector<const FlowSeries*> select_flows(std::span<const FlowSeries> series,
                                            FlowPolicy policy) {
  std::vector<const FlowSeries*> used;
  for (const auto& s : series) {
    bool unusable = s.failed || s.samples.empty();
    if (unusable && policy == FlowPolicy::Strict) {
      throw ConfigError("flow " + std::to_string(s.flow_id) +
                        ": failed or empty series in strict mode");
    }
    if (!unusable) used.push_back(&s);
  }
  if (used.empty()) throw ConfigError("no usable flows");
  return used;
}

}  // namespace

RateResult compute_rate(std::span<const FlowSeries> series,
                        std::optional<int64_t> t_star_ns, FlowPolicy policy) {
  auto used = select_flows(series, policy);

  int64_t t_min = used[0]->last_t_ns();
  for (const auto* s : used) t_min = std::min(t_min, s->last_t_ns());

  int64_t t_star = t_star_ns.value_or(t_min);
  if (t_star <= 0) throw ConfigError("t* must be positive");
  if (t_star > t_min) {
    throw ConfigError("t* exceeds the shortest flow series");
  }

  RateResult result;
  result.t_star_ns = t_star;
  result.flows_used = static_cast<int>(used.size());
  double total = 0.0;
  for (const auto* s : used) {
    double b = interpolate_bytes(*s, t_star);
    result.per_flow_bytes[s->flow_id] = b;
    total += b;
  }
  result.rate_bytes_per_s =
      total / (static_cast<double>(t_star) / kNanosPerSecond);
  return result;
}

RateCurve resample_curve(std::span<const FlowSeries> series,
                         int64_t grid_step_ns, int64_t horizon_ns,
                         FlowPolicy policy) {
  if (grid_step_ns <= 0) throw ConfigError("grid step must be positive");
  if (horizon_ns <= 0) throw ConfigError("horizon must be positive");
  auto used = select_flows(series, policy);
  int64_t t_min = used[0]->last_t_ns();
  for (const auto* s : used) t_min = std::min(t_min, s->last_t_ns());

  RateCurve curve;
  curve.grid_step_ns = grid_step_ns;
  if (horizon_ns > t_min) {
    curve.truncated = true;
    horizon_ns = t_min;
  }
  for (int64_t t = grid_step_ns; t <= horizon_ns; t += grid_step_ns) {
    RateResult r = compute_rate(series, t, policy);
    curve.t_star_ns.push_back(t);
    curve.rate_bytes_per_s.push_back(r.rate_bytes_per_s);
  }
  return curve;
}

}  // namespace nettest
