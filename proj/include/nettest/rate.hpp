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

#ifndef NETTEST_RATE_HPP
#define NETTEST_RATE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "nettest/clock.hpp"
#include "nettest/error.hpp"

namespace nettest {

/// One cumulative sample: at `t_ns` after the common phase start, `bytes`
/// had arrived in total on this flow.
struct FlowSample {
  int64_t t_ns = 0;
  int64_t bytes = 0;

  bool operator==(const FlowSample&) const = default;
};

/// Per-flow cumulative time series. The sample at (0, 0) is implicit; the
/// stored samples start with the first chunk.
struct FlowSeries {
  int flow_id = 0;
  std::vector<FlowSample> samples;
  bool failed = false;  // flow died mid-phase; series is the surviving prefix

  bool operator==(const FlowSeries&) const = default;

  /// Throws ConfigError unless t is strictly increasing and positive and
  /// bytes are non-decreasing.
  void validate() const;

  int64_t last_t_ns() const {
    return samples.empty() ? 0 : samples.back().t_ns;
  }
};

/// Aggregate over a set of flows at a common horizon t*.
struct RateResult {
  int64_t t_star_ns = 0;
  std::map<int, double> per_flow_bytes;
  double rate_bytes_per_s = 0.0;
  int flows_used = 0;

  double rate_bits_per_s() const { return rate_bytes_per_s * 8.0; }
};

/// Aggregate rate evaluated over a uniform grid of horizons.
struct RateCurve {
  int64_t grid_step_ns = 0;
  std::vector<int64_t> t_star_ns;        // k*grid_step for k = 1..N
  std::vector<double> rate_bytes_per_s;  // same length
  bool truncated = false;  // requested horizon exceeded min flow length

  size_t size() const { return t_star_ns.size(); }
};

/// How compute_rate treats empty or failed flows: drop them from the flow
/// set (default) or refuse the input.
enum class FlowPolicy { ExcludeFailed, Strict };

/// Minimum over flows of the last sample time. Throws ConfigError if any
/// series is empty.
int64_t compute_t_star(std::span<const FlowSeries> series);

/// Bytes received on one flow from time 0 to t_star, linearly interpolated
/// between the two samples bracketing t_star (with the implicit leading
/// (0,0) sample). Requires 0 < t_star <= last sample time.
double interpolate_bytes(const FlowSeries& series, int64_t t_star_ns);

/// Aggregate rate over all flows at t_star (defaults to compute_t_star).
RateResult compute_rate(std::span<const FlowSeries> series,
                        std::optional<int64_t> t_star_ns = std::nullopt,
                        FlowPolicy policy = FlowPolicy::ExcludeFailed);

constexpr int64_t kDefaultGridStepNs = 10 * kNanosPerMilli;

/// Evaluates compute_rate on every grid point k*grid_step_ns up to
/// `horizon_ns`. Horizons beyond the common flow length are truncated
/// (flagged on the result).
RateCurve resample_curve(std::span<const FlowSeries> series,
                         int64_t grid_step_ns, int64_t horizon_ns,
                         FlowPolicy policy = FlowPolicy::ExcludeFailed);

}  // namespace nettest

#endif  // NETTEST_RATE_HPP
