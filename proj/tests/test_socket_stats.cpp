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

#include <memory>
#include <thread>
#include <vector>

#include "nettest/clock.hpp"
#include "nettest/error.hpp"
#include "nettest/net.hpp"
#include "nettest/socket_stats.hpp"

using namespace nettest;

namespace {

// Connected loopback TCP pair for introspection tests.
struct TcpPair {
  std::unique_ptr<TcpStream> client;
  std::unique_ptr<TcpStream> server;

  TcpPair() {
    TcpListener listener("127.0.0.1", 0);
    client = TcpStream::connect("127.0.0.1", listener.port());
    server = listener.accept();
    REQUIRE(server != nullptr);
  }
};

}  // namespace

TEST_CASE("transport introspection is available on this platform") {
  CHECK(socket_stats_supported());
}

TEST_CASE("a live TCP socket yields kernel transport state") {
  TcpPair pair;
  // Exchange some data so the connection has real transport history.
  std::vector<uint8_t> payload(256 * 1024, 0x33);
  std::thread writer([&] { pair.client->write_all(payload); });
  std::vector<uint8_t> buf(payload.size());
  read_exact(*pair.server, buf, kNanosPerSecond);
  writer.join();

  REQUIRE(pair.client->native_handle().has_value());
  SocketStatsSample s =
      sample_flow(*pair.client->native_handle(), 4, 123 * kNanosPerMilli);
  CHECK(s.flow_id == 4);
  CHECK(s.t_ns == 123 * kNanosPerMilli);
  REQUIRE(s.congestion_window.has_value());
  CHECK(*s.congestion_window > 0);
  REQUIRE(s.rtt_us.has_value());
  CHECK(*s.rtt_us >= 0);
  REQUIRE(s.retransmits_total.has_value());
  CHECK(*s.retransmits_total >= 0);
  REQUIRE(s.bytes_acked.has_value());
  CHECK(*s.bytes_acked > 0);  // the kernel saw our 256 KiB
}

TEST_CASE("a closed descriptor degrades to an all-absent sample") {
  SocketStatsSample s = sample_flow(-1, 1, 0);
  CHECK(s.flow_id == 1);
  CHECK_FALSE(s.rtt_us.has_value());
  CHECK_FALSE(s.congestion_window.has_value());
  CHECK_FALSE(s.bytes_acked.has_value());
}

TEST_CASE("sampler collects periodic samples until stopped") {
  TcpPair pair;
  RealClock clock;
  StatsSampler sampler(*pair.client->native_handle(), 2, "dl",
                       5 * kNanosPerMilli, clock);
  std::thread runner([&] { sampler.run(); });
  std::this_thread::sleep_for(std::chrono::milliseconds(60));
  sampler.stop();
  runner.join();

  auto samples = sampler.take_samples();
  REQUIRE(samples.size() >= 3);
  int64_t prev = -1;
  for (const auto& s : samples) {
    CHECK(s.flow_id == 2);
    CHECK(s.stage == "dl");
    CHECK(s.t_ns > prev);
    prev = s.t_ns;
  }
}

TEST_CASE("sampler rejects sub-millisecond intervals") {
  TcpPair pair;
  RealClock clock;
  CHECK_THROWS_AS(StatsSampler(*pair.client->native_handle(), 1, "ul",
                               kNanosPerMilli / 2, clock),
                  ConfigError);
}
