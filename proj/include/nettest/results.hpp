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

#ifndef NETTEST_RESULTS_HPP
#define NETTEST_RESULTS_HPP

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nettest/client.hpp"
#include "nettest/path_probe.hpp"
#include "nettest/rate.hpp"
#include "nettest/socket_stats.hpp"

namespace nettest {

/// Flat result view written to summary.json. Field names carry explicit
/// units (ns, bytes, bps).
struct SummaryRecord {
  std::string test_id;
  MeasurementConfig config;
  std::string start_time_utc;
  std::string end_time_utc;
  RunStatus status = RunStatus::Aborted;
  std::optional<double> dl_rate_bps;
  std::optional<double> ul_rate_bps;
  std::optional<int64_t> ping_median_ns;
  std::string server_host;
  std::string server_resolved_address;
  uint64_t chunk_size_used_bytes = 0;
  uint64_t pretest_final_chunk_size_bytes = 0;
  int64_t total_downloaded_bytes = 0;
  int64_t total_uploaded_bytes = 0;
};

/// Everything read back from one run directory. The raw documents are
/// retained so fields this version does not know about survive a
/// read/modify cycle.
struct RunArtifacts {
  RunRecord record;
  SummaryRecord summary;
  std::vector<SocketStatsSample> stats;
  TraceResult trace;
  bool stats_missing = false;
  nlohmann::json raw_summary;
  nlohmann::json raw_flows;
  nlohmann::json raw_stats;
  nlohmann::json raw_trace;
};

/// Emits summary.json, flows.json, stats.json and traceroute.json into
/// `out_dir` (created if needed). Each file is written to a temp name and
/// renamed, so partial files are never left behind. Rates may be absent
/// when the corresponding phase produced no usable flows.
std::array<std::filesystem::path, 4> write_run(
    const RunRecord& record, const std::optional<RateResult>& dl_rate,
    const std::optional<RateResult>& ul_rate, const TraceResult& trace,
    const std::filesystem::path& out_dir);

/// Lossless inverse of write_run. Validates series monotonicity; a
/// violation raises SchemaError naming the file, flow and sample index.
/// A missing stats.json degrades to stats_missing = true.
RunArtifacts read_run(const std::filesystem::path& dir);

// Per-file (de)serializers, exposed for fixtures and tools.
nlohmann::json summary_to_json(const SummaryRecord& summary);
SummaryRecord summary_from_json(const nlohmann::json& j);
nlohmann::json flows_to_json(const RunRecord& record);
void flows_from_json(const nlohmann::json& j, RunRecord& record);
nlohmann::json stats_to_json(const std::vector<SocketStatsSample>& samples);
std::vector<SocketStatsSample> stats_from_json(const nlohmann::json& j);
nlohmann::json trace_to_json(const TraceResult& trace);
TraceResult trace_from_json(const nlohmann::json& j);

/// Builds the summary view for a finished run.
SummaryRecord make_summary(const RunRecord& record,
                           const std::optional<RateResult>& dl_rate,
                           const std::optional<RateResult>& ul_rate);

/// Atomic write helper (temp file + rename). Throws IoError naming the
/// target on failure.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

}  // namespace nettest

#endif  // NETTEST_RESULTS_HPP
