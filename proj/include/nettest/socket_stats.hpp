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

#ifndef NETTEST_SOCKET_STATS_HPP
#define NETTEST_SOCKET_STATS_HPP

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nettest/clock.hpp"

namespace nettest {

/// One kernel-level snapshot of a flow's transport state. Fields the
/// platform cannot report are absent, not zero.
struct SocketStatsSample {
  int flow_id = 0;
  std::string stage;  // "dl" or "ul"
  int64_t t_ns = 0;   // relative to phase start
  std::optional<int64_t> rtt_us;
  std::optional<int64_t> rtt_var_us;
  std::optional<int64_t> retransmits_total;
  std::optional<int64_t> slow_start_threshold;
  std::optional<int64_t> congestion_window;
  std::optional<int64_t> bytes_acked;

  bool operator==(const SocketStatsSample&) const = default;
};

/// Whether per-connection transport introspection works here. Detected
/// once; on unsupported platforms samples come back all-absent and the
/// measurement carries on.
bool socket_stats_supported();

/// One snapshot of the socket `fd` at relative time `t_now_ns`.
SocketStatsSample sample_flow(int fd, int flow_id, int64_t t_now_ns);

/// Periodic sampler controlled by an external stop flag. Runs on its own
/// thread beside the flow worker; call collect() after the phase.
class StatsSampler {
 public:
  /// interval_ns must be >= 1 ms (throws ConfigError otherwise).
  StatsSampler(int fd, int flow_id, std::string stage, int64_t interval_ns,
               Clock& clock);

  /// Samples every interval until stop() (blocking call; typically run
  /// via std::thread).
  void run();
  void stop() { stop_.store(true); }

  std::vector<SocketStatsSample> take_samples() { return std::move(samples_); }

 private:
  int fd_;
  int flow_id_;
  std::string stage_;
  int64_t interval_ns_;
  Clock& clock_;
  std::atomic<bool> stop_{false};
  std::vector<SocketStatsSample> samples_;
};

}  // namespace nettest

#endif  // NETTEST_SOCKET_STATS_HPP
