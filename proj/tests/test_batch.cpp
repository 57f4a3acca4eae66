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

#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "nettest/batch.hpp"
#include "nettest/error.hpp"
#include "nettest/results.hpp"

using namespace nettest;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  fs::path dir = fs::temp_directory_path() /
                 ("nettest_batch_" + tag + "_" +
                  std::to_string(counter.fetch_add(1)));
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> run_ids(const std::vector<MeasurementConfig>& cs) {
  std::vector<std::string> ids;
  ids.reserve(cs.size());
  for (const auto& c : cs) ids.push_back(c.run_id);
  return ids;
}

// Executor that fabricates a small but structurally valid run: one flow
// per direction, 1000 bytes down and 500 bytes up.
RunRecord fake_run(const MeasurementConfig& config) {
  RunRecord r;
  r.config = config;
  FlowSeries dl;
  dl.flow_id = 1;
  dl.samples = {{kNanosPerSecond / 2, 400}, {kNanosPerSecond, 1000}};
  r.dl_series = {dl};
  FlowSeries ul;
  ul.flow_id = 1;
  ul.samples = {{kNanosPerSecond, 500}};
  r.ul_series = {ul};
  r.pretest_dl_series = r.dl_series;
  r.pretest_ul_series = r.ul_series;
  r.ping.rtts_ns = {10 * kNanosPerMilli};
  r.ping.median_ns = 10 * kNanosPerMilli;
  r.start_wallclock_utc = "2026-08-23T00:00:00Z";
  r.end_wallclock_utc = "2026-08-23T00:00:01Z";
  r.status = RunStatus::Complete;
  r.pretest_final_chunk_size = 4096;
  r.chunk_size_used = 4096;
  r.server_address = config.server_host;
  return r;
}

}  // namespace

TEST_CASE("expand forms the cartesian product times repetitions") {
  BatchSpec spec;
  spec.batch_id = "c1";
  spec.axes["flows"] = {json(1), json(3)};
  spec.repetitions = 2;

  auto configs = expand(spec);
  REQUIRE(configs.size() == 4);
  CHECK(configs[0].run_id == "c1-flows=1-rep0");
  CHECK(configs[1].run_id == "c1-flows=3-rep0");
  CHECK(configs[2].run_id == "c1-flows=1-rep1");
  CHECK(configs[3].run_id == "c1-flows=3-rep1");
  CHECK(configs[0].flows_dl == 1);
  CHECK(configs[0].flows_ul == 1);
  CHECK(configs[1].flows_dl == 3);
  CHECK(configs[1].flows_ul == 3);
}

TEST_CASE("expand with no axes yields one config per repetition") {
  BatchSpec spec;
  spec.batch_id = "solo";
  spec.repetitions = 3;
  auto configs = expand(spec);
  REQUIRE(configs.size() == 3);
  CHECK(configs[0].run_id == "solo-rep0");
  CHECK(configs[2].run_id == "solo-rep2");
}

TEST_CASE("a campaign-style grid expands deterministically") {
  BatchSpec spec;
  spec.batch_id = "grid";
  spec.axes["flows"] = {json(1), json(3), json(5), json(7)};
  spec.axes["server_host"] = {json("s1.example"), json("s2.example")};
  spec.repetitions = 3;
  CHECK(spec.total_runs() == 24);

  auto configs = expand(spec);
  REQUIRE(configs.size() == 24);
  CHECK(run_ids(configs) == run_ids(expand(spec)));
  CHECK(configs.front().run_id == "grid-flows=1-server_host=s1.example-rep0");
  CHECK(configs.back().run_id == "grid-flows=7-server_host=s2.example-rep2");
  CHECK(configs.front().server_host == "s1.example");
  CHECK(configs[1].server_host == "s2.example");
  CHECK(configs[2].flows_dl == 3);

  // Every run id is unique.
  auto ids = run_ids(configs);
  std::sort(ids.begin(), ids.end());
  CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
}

TEST_CASE("shuffled order is a seed-deterministic permutation of the grid") {
  BatchSpec spec;
  spec.batch_id = "shuf";
  spec.axes["flows"] = {json(1), json(3), json(5), json(7)};
  spec.repetitions = 4;
  spec.order = BatchSpec::Order::Shuffled;
  spec.shuffle_seed = 42;

  auto a = expand(spec);
  auto b = expand(spec);
  CHECK(run_ids(a) == run_ids(b));

  BatchSpec grid = spec;
  grid.order = BatchSpec::Order::Grid;
  auto sorted_shuffled = run_ids(a);
  auto sorted_grid = run_ids(expand(grid));
  std::sort(sorted_shuffled.begin(), sorted_shuffled.end());
  std::sort(sorted_grid.begin(), sorted_grid.end());
  CHECK(sorted_shuffled == sorted_grid);

  spec.shuffle_seed = 43;
  CHECK(run_ids(expand(spec)) != run_ids(a));
}

TEST_CASE("invalid batch specs are rejected") {
  BatchSpec spec;
  spec.axes["no_such_knob"] = {json(1)};
  CHECK_THROWS_AS(expand(spec), ConfigError);

  spec.axes.clear();
  spec.axes["flows"] = {};
  CHECK_THROWS_AS(expand(spec), ConfigError);

  spec.axes.clear();
  spec.repetitions = 0;
  CHECK_THROWS_AS(expand(spec), ConfigError);
}

TEST_CASE("run_batch paces runs sequentially with the configured gap") {
  BatchSpec spec;
  spec.batch_id = "paced";
  spec.axes["flows"] = {json(1), json(2), json(3)};
  spec.inter_run_gap_s = 5.0;

  VirtualClock clock;
  VirtualClock::Participant self(clock);
  fs::path out = fresh_temp_dir("paced");
  BatchReport report = run_batch(spec, out, fake_run, clock);

  REQUIRE(report.runs.size() == 3);
  CHECK(report.runs[0].start_ns == 0);
  CHECK(report.runs[1].start_ns == 5 * kNanosPerSecond);
  CHECK(report.runs[2].start_ns == 10 * kNanosPerSecond);
  CHECK_FALSE(report.budget_exhausted);
  CHECK(report.total_bytes_consumed == 3 * 3000);
  for (const auto& run : report.runs) {
    CHECK(run.status == RunStatus::Complete);
    CHECK(fs::exists(fs::path(run.out_dir) / "summary.json"));
    CHECK(fs::exists(fs::path(run.out_dir) / "flows.json"));
  }
  fs::remove_all(out);
}

TEST_CASE("a failing run is recorded and the batch continues") {
  BatchSpec spec;
  spec.batch_id = "flaky";
  spec.axes["flows"] = {json(1), json(2), json(3)};

  RealClock clock;
  fs::path out = fresh_temp_dir("flaky");
  auto executor = [](const MeasurementConfig& config) -> RunRecord {
    if (config.flows_dl == 2) throw IoError("emulated outage");
    return fake_run(config);
  };
  BatchReport report = run_batch(spec, out, executor, clock);

  REQUIRE(report.runs.size() == 3);
  CHECK(report.runs[0].status == RunStatus::Complete);
  CHECK(report.runs[1].status == RunStatus::Aborted);
  CHECK(report.runs[1].out_dir.empty());
  CHECK(report.runs[1].bytes_consumed == 0);
  CHECK(report.runs[2].status == RunStatus::Complete);
  CHECK(report.total_bytes_consumed == 2 * 3000);
  fs::remove_all(out);
}

TEST_CASE("the byte budget stops the batch early") {
  BatchSpec spec;
  spec.batch_id = "budget";
  spec.repetitions = 10;
  spec.byte_budget = 6000;  // each fake run consumes 3000 bytes

  RealClock clock;
  fs::path out = fresh_temp_dir("budget");
  BatchReport report = run_batch(spec, out, fake_run, clock);

  CHECK(report.runs.size() == 2);
  CHECK(report.total_bytes_consumed == 6000);
  CHECK(report.budget_exhausted);
  fs::remove_all(out);
}

TEST_CASE("batch specs parse from their JSON document form") {
  json j = {
      {"batch_id", "parsed"},
      {"base", {{"server_host", "192.0.2.1"}, {"flows", 2}}},
      {"axes", {{"duration_dl_s", {2.0, 5.0}}}},
      {"repetitions", 2},
      {"inter_run_gap_s", 1.5},
      {"order", "shuffled"},
      {"shuffle_seed", 7},
      {"byte_budget", 123456},
  };
  BatchSpec spec = parse_batch_spec(j);
  CHECK(spec.batch_id == "parsed");
  CHECK(spec.base.server_host == "192.0.2.1");
  CHECK(spec.base.flows_dl == 2);
  CHECK(spec.base.flows_ul == 2);
  CHECK(spec.repetitions == 2);
  CHECK(spec.inter_run_gap_s == 1.5);
  CHECK(spec.order == BatchSpec::Order::Shuffled);
  CHECK(spec.shuffle_seed == 7);
  CHECK(spec.byte_budget == 123456);
  CHECK(expand(spec).size() == 4);

  json bad = j;
  bad["order"] = "random";
  CHECK_THROWS_AS(parse_batch_spec(bad), ConfigError);
}

TEST_CASE("batch specs load from a file") {
  const char* fixtures = std::getenv("NETTEST_FIXTURES");
  REQUIRE(fixtures != nullptr);
  BatchSpec spec = load_batch_spec(fs::path(fixtures) / "batch_spec.json");
  CHECK(spec.batch_id == "campaign1");
  CHECK(spec.base.server_port == 5000);
  CHECK(spec.base.stats_interval_ns == 100 * kNanosPerMilli);
  CHECK(spec.inter_run_gap_s == 30.0);
  CHECK(spec.repetitions == 2);
  CHECK(spec.total_runs() == 16);

  auto configs = expand(spec);
  REQUIRE(configs.size() == 16);
  CHECK(configs[0].flows_dl == 1);
  CHECK(configs[0].server_host == "192.0.2.10");
  CHECK(configs[1].server_host == "192.0.2.11");

  CHECK_THROWS_AS(load_batch_spec("/nonexistent/spec.json"), IoError);
  auto tmp = fs::temp_directory_path() / "nettest_bad_spec.json";
  write_file_atomic(tmp, "{ not json\n");
  CHECK_THROWS_AS(load_batch_spec(tmp), SchemaError);
  fs::remove(tmp);
}
