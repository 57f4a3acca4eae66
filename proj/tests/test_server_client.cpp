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

#include <string>
#include <vector>

#include "nettest/client.hpp"
#include "nettest/error.hpp"
#include "nettest/net.hpp"
#include "nettest/protocol.hpp"
#include "nettest/rate.hpp"
#include "nettest/server.hpp"
#include "sim_harness.hpp"

using namespace nettest;

TEST_CASE("median_lower takes the lower of two middle values") {
  CHECK(median_lower({5}) == 5);
  CHECK(median_lower({3, 9}) == 3);
  CHECK(median_lower({9, 3}) == 3);
  CHECK(median_lower({1, 2, 3}) == 2);
  CHECK(median_lower({4, 1, 3, 2}) == 2);
  CHECK_THROWS_AS(median_lower({}), ConfigError);
}

TEST_CASE("utc timestamps are RFC 3339 formatted") {
  std::string ts = utc_timestamp_now();
  REQUIRE(ts.size() >= 20);
  CHECK(ts[4] == '-');
  CHECK(ts[7] == '-');
  CHECK(ts[10] == 'T');
  CHECK(ts[13] == ':');
  CHECK(ts[16] == ':');
  CHECK(ts.back() == 'Z');
}

TEST_CASE("measurement config validation") {
  MeasurementConfig c;
  CHECK_NOTHROW(c.validate());
  c.flows_dl = 0;
  c.flows_ul = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = MeasurementConfig{};
  c.duration_dl_s = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = MeasurementConfig{};
  c.ping_count = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = MeasurementConfig{};
  c.chunk_size = 32;  // below the protocol minimum
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("full five-phase run over an emulated link") {
  LinkModel model;
  model.capacity_bps = 20e6;
  model.one_way_delay_ns = 10 * kNanosPerMilli;

  testing::SimHarness harness(model);
  MeasurementConfig config;
  config.flows_dl = 3;
  config.flows_ul = 3;
  config.duration_dl_s = 3.0;
  config.duration_ul_s = 3.0;
  config.duration_pretest_s = 0.5;
  config.ping_count = 5;
  config.run_id = "sim-integration";

  RunRecord record = harness.run(config);

  CHECK(record.status == RunStatus::Complete);
  CHECK(record.config == config);
  REQUIRE(record.dl_series.size() == 3);
  REQUIRE(record.ul_series.size() == 3);
  REQUIRE(record.pretest_dl_series.size() == 3);
  REQUIRE(record.pretest_ul_series.size() == 3);
  CHECK(record.chunk_size_used >= kMinChunkSize);
  CHECK(record.pretest_final_chunk_size >= kMinChunkSize);
  CHECK(record.total_downloaded_bytes() > 0);
  CHECK(record.total_uploaded_bytes() > 0);
  CHECK_FALSE(record.start_wallclock_utc.empty());
  CHECK_FALSE(record.end_wallclock_utc.empty());

  for (const auto& series :
       {record.dl_series, record.ul_series, record.pretest_dl_series,
        record.pretest_ul_series}) {
    for (const auto& s : series) {
      CHECK_FALSE(s.failed);
      CHECK_FALSE(s.samples.empty());
      CHECK_NOTHROW(s.validate());
    }
  }

  // Both timed stages should sit near the link capacity.
  RateResult dl = compute_rate(record.dl_series);
  RateResult ul = compute_rate(record.ul_series);
  CHECK(dl.rate_bits_per_s() > 20e6 * 0.9);
  CHECK(dl.rate_bits_per_s() < 20e6 * 1.1);
  CHECK(ul.rate_bits_per_s() > 20e6 * 0.9);
  CHECK(ul.rate_bits_per_s() < 20e6 * 1.1);

  // Ping ran on the first flow against a 20 ms round trip.
  REQUIRE(record.ping.rtts_ns.size() + record.ping.lost == 5);
  CHECK(record.ping.median_ns >= 20 * kNanosPerMilli);
  CHECK(record.ping.median_ns < 25 * kNanosPerMilli);
}

TEST_CASE("asymmetric flow counts use max(flows_dl, flows_ul) connections") {
  LinkModel model;
  model.capacity_bps = 20e6;
  model.one_way_delay_ns = 5 * kNanosPerMilli;

  testing::SimHarness harness(model);
  MeasurementConfig config;
  config.flows_dl = 1;
  config.flows_ul = 3;
  config.duration_dl_s = 1.0;
  config.duration_ul_s = 1.0;
  config.duration_pretest_s = 0.3;
  config.ping_count = 3;

  RunRecord record = harness.run(config);
  CHECK(record.status == RunStatus::Complete);
  CHECK(record.dl_series.size() == 1);
  CHECK(record.ul_series.size() == 3);
}

TEST_CASE("full five-phase run over loopback TCP") {
  ServerConfig server_config;
  server_config.listen_host = "127.0.0.1";
  server_config.listen_port = 0;  // ephemeral
  Server server(server_config);
  server.start();

  MeasurementConfig config;
  config.server_host = "127.0.0.1";
  config.server_port = server.port();
  config.flows_dl = 2;
  config.flows_ul = 2;
  config.duration_dl_s = 0.4;
  config.duration_ul_s = 0.4;
  config.duration_pretest_s = 0.2;
  config.ping_count = 3;
  config.run_id = "loopback";

  RunRecord record = run_measurement(config);
  server.stop();

  CHECK(record.status == RunStatus::Complete);
  CHECK(record.dl_series.size() == 2);
  CHECK(record.ul_series.size() == 2);
  CHECK(record.server_address == "127.0.0.1");
  CHECK(record.total_downloaded_bytes() > 0);
  CHECK(record.total_uploaded_bytes() > 0);
  CHECK(record.ping.median_ns > 0);
  for (const auto& s : record.dl_series) CHECK_NOTHROW(s.validate());
  for (const auto& s : record.ul_series) CHECK_NOTHROW(s.validate());
}

TEST_CASE("server answers garbage with ERR and drops the connection") {
  ServerConfig server_config;
  server_config.listen_host = "127.0.0.1";
  server_config.listen_port = 0;
  Server server(server_config);
  server.start();

  auto stream = TcpStream::connect("127.0.0.1", server.port());
  write_line(*stream, serialize_message(ControlMessage::greeting()));
  std::string greeting = read_line(*stream, 2 * kNanosPerSecond);
  CHECK(parse_message(greeting).kind == MessageKind::Greeting);

  write_line(*stream, "NONSENSE 1 2 3\n");
  std::string reply = read_line(*stream, 2 * kNanosPerSecond);
  CHECK(parse_message(reply).kind == MessageKind::Err);

  // The server closes after an error; the next read hits EOF.
  std::vector<uint8_t> buf(64);
  CHECK(stream->read_some(buf, 2 * kNanosPerSecond) == 0);
  server.stop();
}

TEST_CASE("a client that quits immediately leaves the server healthy") {
  ServerConfig server_config;
  server_config.listen_host = "127.0.0.1";
  server_config.listen_port = 0;
  Server server(server_config);
  server.start();

  for (int i = 0; i < 3; ++i) {
    auto stream = TcpStream::connect("127.0.0.1", server.port());
    write_line(*stream, serialize_message(ControlMessage::quit()));
    stream->close();
  }

  // The server still serves a real measurement afterwards.
  MeasurementConfig config;
  config.server_host = "127.0.0.1";
  config.server_port = server.port();
  config.flows_dl = 1;
  config.flows_ul = 1;
  config.duration_dl_s = 0.2;
  config.duration_ul_s = 0.2;
  config.duration_pretest_s = 0.1;
  config.ping_count = 2;
  RunRecord record = run_measurement(config);
  CHECK(record.status == RunStatus::Complete);
  server.stop();
}
