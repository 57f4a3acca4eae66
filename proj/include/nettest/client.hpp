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

#ifndef NETTEST_CLIENT_HPP
#define NETTEST_CLIENT_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nettest/clock.hpp"
#include "nettest/rate.hpp"
#include "nettest/socket_stats.hpp"
#include "nettest/stream.hpp"

namespace nettest {

struct MeasurementConfig {
  std::string server_host = "127.0.0.1";
  uint16_t server_port = 5001;
  int flows_dl = 3;
  int flows_ul = 3;
  double duration_dl_s = 15.0;
  double duration_ul_s = 15.0;
  double duration_pretest_s = 2.0;
  int ping_count = 10;
  // 0 means "use the size the pre-test settled on".
  uint64_t chunk_size = 0;
  int64_t stats_interval_ns = 100 * kNanosPerMilli;
  std::string run_id;

  bool operator==(const MeasurementConfig&) const = default;

  void validate() const;

  int64_t duration_dl_ns() const {
    return static_cast<int64_t>(duration_dl_s * kNanosPerSecond);
  }
  int64_t duration_ul_ns() const {
    return static_cast<int64_t>(duration_ul_s * kNanosPerSecond);
  }
  int64_t duration_pretest_ns() const {
    return static_cast<int64_t>(duration_pretest_s * kNanosPerSecond);
  }
};

struct PingResult {
  std::vector<int64_t> rtts_ns;  // successful exchanges only
  int lost = 0;
  int64_t median_ns = 0;

  bool operator==(const PingResult&) const = default;
};

enum class RunStatus { Complete, PartialFailure, Aborted };

std::string to_string(RunStatus status);
RunStatus run_status_from_string(const std::string& s);

struct RunRecord {
  MeasurementConfig config;
  std::vector<FlowSeries> pretest_dl_series;
  std::vector<FlowSeries> dl_series;
  std::vector<FlowSeries> pretest_ul_series;
  std::vector<FlowSeries> ul_series;  // server-receipt timestamps
  PingResult ping;
  std::string start_wallclock_utc;  // RFC 3339
  std::string end_wallclock_utc;
  RunStatus status = RunStatus::Aborted;
  uint64_t pretest_final_chunk_size = 0;
  uint64_t chunk_size_used = 0;
  std::string server_address;  // resolved numeric address, if known
  std::vector<SocketStatsSample> stats;

  bool operator==(const RunRecord&) const = default;

  int64_t total_downloaded_bytes() const;
  int64_t total_uploaded_bytes() const;
};

/// Dials one flow connection; real runs connect TCP, tests hand out
/// emulated endpoints. Throws IoError when the server is unreachable.
using Connector = std::function<std::unique_ptr<Stream>()>;

/// Executes the five phases (pre-test DL, ping, DL, pre-test UL, UL) over
/// `flows` parallel connections, one worker per flow, with a barrier in
/// front of every timed phase.
///
/// When `clock` is a VirtualClock the calling thread must already be
/// registered as a participant.
RunRecord run_measurement(const MeasurementConfig& config,
                          const Connector& connector, Clock& clock);

/// Convenience wrapper dialing config.server_host:config.server_port over
/// TCP with a real clock.
RunRecord run_measurement(const MeasurementConfig& config);

/// Pre-test DL: requests chunks doubling from 64 B until the duration
/// elapses; returns the last completed size. Appends per-chunk samples to
/// `series` when given.
uint64_t run_pretest_dl(Stream& stream, Clock& clock, int64_t duration_ns,
                        FlowSeries* series = nullptr);

/// Pre-test UL counterpart (client sends the doubling chunks).
uint64_t run_pretest_ul(Stream& stream, Clock& clock, int64_t duration_ns,
                        uint64_t seed, FlowSeries* series = nullptr);

/// `count` PING/PONG exchanges; RTTs measured on `clock`. A missing PONG
/// within 2 s marks that sample lost; more than half lost is a phase
/// failure (throws IoError).
PingResult run_ping(Stream& stream, Clock& clock, int count);

/// Lower-of-two-middle-values median; integer exact. Throws ConfigError on
/// empty input.
int64_t median_lower(std::vector<int64_t> values);

/// Current wall-clock time as an RFC 3339 UTC string.
std::string utc_timestamp_now();

}  // namespace nettest

#endif  // NETTEST_CLIENT_HPP
