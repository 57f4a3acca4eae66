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

#ifndef NETTEST_BATCH_HPP
#define NETTEST_BATCH_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nettest/client.hpp"
#include "nettest/path_probe.hpp"

namespace nettest {

/// A grid of measurement configurations run back to back as one batch.
struct BatchSpec {
  std::string batch_id = "batch";
  MeasurementConfig base;
  // Axis name -> list of values. Names must be MeasurementConfig fields
  // (see expand); std::map keeps expansion order deterministic.
  std::map<std::string, std::vector<nlohmann::json>> axes;
  int repetitions = 1;
  double inter_run_gap_s = 0.0;

  enum class Order { Grid, Shuffled };
  Order order = Order::Grid;
  uint64_t shuffle_seed = 0;

  // Abort the batch once this many bytes have been consumed.
  std::optional<int64_t> byte_budget;

  void validate() const;

  size_t total_runs() const;
};

/// Cartesian product of the axes times repetitions, ordered per
/// spec.order. Each config's run_id embeds batch id, axis values and
/// repetition index. Throws ConfigError on an unknown axis name.
std::vector<MeasurementConfig> expand(const BatchSpec& spec);

struct BatchReport {
  struct RunOutcome {
    std::string run_id;
    RunStatus status = RunStatus::Aborted;
    std::string out_dir;
    int64_t bytes_consumed = 0;
    int64_t start_ns = 0;
    int64_t end_ns = 0;
  };
  std::vector<RunOutcome> runs;
  int64_t total_bytes_consumed = 0;
  bool budget_exhausted = false;
};

/// Pluggable run execution so batches can drive a real client or an
/// emulated one in tests.
using MeasurementExecutor = std::function<RunRecord(const MeasurementConfig&)>;

/// Runs the expanded configs strictly sequentially with the configured gap
/// between runs; a failed run is recorded and the batch continues. Results
/// land in out_root/<run_id>/.
BatchReport run_batch(const BatchSpec& spec,
                      const std::filesystem::path& out_root,
                      const MeasurementExecutor& executor, Clock& clock,
                      const TraceResult& trace = {});

/// Parses the declarative batch file format (JSON document with base
/// config, axes, repetitions, gap, order).
BatchSpec parse_batch_spec(const nlohmann::json& j);
BatchSpec load_batch_spec(const std::filesystem::path& file);

}  // namespace nettest

#endif  // NETTEST_BATCH_HPP
