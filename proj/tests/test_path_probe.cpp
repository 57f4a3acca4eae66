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

#include <cstdlib>
#include <filesystem>
#include <string>

#include "nettest/clock.hpp"
#include "nettest/error.hpp"
#include "nettest/path_probe.hpp"
#include "nettest/results.hpp"

using namespace nettest;

namespace {

std::filesystem::path fixture(const std::string& name) {
  const char* dir = std::getenv("NETTEST_FIXTURES");
  REQUIRE(dir != nullptr);
  return std::filesystem::path(dir) / name;
}

}  // namespace

TEST_CASE("private and special IPv4 ranges are recognized") {
  CHECK(is_private_ipv4("10.0.0.1"));
  CHECK(is_private_ipv4("10.255.255.255"));
  CHECK(is_private_ipv4("172.16.0.1"));
  CHECK(is_private_ipv4("172.31.255.254"));
  CHECK(is_private_ipv4("192.168.1.1"));
  CHECK(is_private_ipv4("127.0.0.1"));
  CHECK(is_private_ipv4("169.254.10.10"));

  CHECK_FALSE(is_private_ipv4("172.32.0.1"));
  CHECK_FALSE(is_private_ipv4("11.0.0.1"));
  CHECK_FALSE(is_private_ipv4("8.8.8.8"));
  CHECK_FALSE(is_private_ipv4("192.0.2.1"));
  CHECK_FALSE(is_private_ipv4("not-an-address"));
}

TEST_CASE("asn lookup is longest-prefix-match") {
  AsnDatabase db;
  db.add_prefix("192.0.2.0/24", 64500);
  db.add_prefix("203.0.113.0/24", 64502);
  db.add_prefix("203.0.113.128/25", 64503);
  db.add_prefix("8.0.0.0/8", 3356);

  CHECK(db.lookup("192.0.2.55") == 64500);
  CHECK(db.lookup("203.0.113.5") == 64502);
  CHECK(db.lookup("203.0.113.200") == 64503);  // /25 beats /24
  CHECK(db.lookup("8.1.2.3") == 3356);
  CHECK_FALSE(db.lookup("9.9.9.9").has_value());
  CHECK_FALSE(db.lookup("10.1.2.3").has_value());  // private never matches
  CHECK_FALSE(db.lookup("fe80::1").has_value());   // non-IPv4
  CHECK_FALSE(db.lookup("garbage").has_value());
}

TEST_CASE("asn table loads from the fixture file") {
  AsnDatabase db = AsnDatabase::load(fixture("asn_prefixes.txt"));
  CHECK(db.size() == 6);
  CHECK(db.lookup("192.0.2.1") == 64500);
  CHECK(db.lookup("198.51.100.77") == 64501);
  CHECK(db.lookup("100.64.3.2") == 64512);
}

TEST_CASE("bad database inputs raise typed errors") {
  CHECK_THROWS_AS(AsnDatabase::load("/nonexistent/prefixes.txt"), IoError);

  auto tmp = std::filesystem::temp_directory_path() / "nettest_bad_asn.txt";
  write_file_atomic(tmp, "192.0.2.0/24 not_a_number\n");
  CHECK_THROWS_AS(AsnDatabase::load(tmp), SchemaError);
  write_file_atomic(tmp, "not_a_prefix 64500\n");
  CHECK_THROWS_AS(AsnDatabase::load(tmp), SchemaError);
  std::filesystem::remove(tmp);

  AsnDatabase db;
  CHECK_THROWS_AS(db.add_prefix("192.0.2.0/33", 1), SchemaError);
  CHECK_THROWS_AS(db.add_prefix("192.0.2.0", 1), SchemaError);
}

TEST_CASE("annotation decorates public hops and nothing else") {
  AsnDatabase db;
  db.add_prefix("192.0.2.0/24", 64500);

  std::vector<TracerouteHop> hops;
  hops.push_back({1, std::string("192.168.1.1"), 900, std::nullopt});
  hops.push_back({2, std::string("192.0.2.9"), 5100, std::nullopt});
  hops.push_back({3, std::nullopt, std::nullopt, std::nullopt});
  hops.push_back({4, std::string("198.51.100.1"), 7000, std::nullopt});

  auto annotated = annotate_asn(hops, db);
  REQUIRE(annotated.size() == 4);
  CHECK_FALSE(annotated[0].asn.has_value());  // private
  CHECK(annotated[1].asn == 64500);
  CHECK_FALSE(annotated[2].asn.has_value());  // silent hop
  CHECK_FALSE(annotated[3].asn.has_value());  // no covering prefix

  // Untouched fields and idempotence.
  CHECK(annotated[1].ttl == 2);
  CHECK(annotated[1].address == "192.0.2.9");
  CHECK(annotated[1].rtt_us == 5100);
  CHECK(annotate_asn(annotated, db) == annotated);
}

TEST_CASE("loopback trace reaches the target in one hop") {
  TraceResult trace = trace_path("127.0.0.1", 5, 1, 500 * kNanosPerMilli);
  if (!trace.ok()) {
    // Some sandboxes forbid even UDP probing; an error status with no
    // fabricated hops is the contract then.
    CHECK(trace.hops.empty());
    return;
  }
  CHECK(trace.target == "127.0.0.1");
  REQUIRE_FALSE(trace.hops.empty());
  const auto& last = trace.hops.back();
  CHECK(last.address == "127.0.0.1");
  CHECK(last.ttl == 1);
  REQUIRE(last.rtt_us.has_value());
  CHECK(*last.rtt_us >= 0);
}

TEST_CASE("an unresolvable target degrades to an error status") {
  TraceResult trace =
      trace_path("definitely-not-a-real-host.invalid", 3, 1,
                 200 * kNanosPerMilli);
  CHECK_FALSE(trace.ok());
  CHECK(trace.hops.empty());
}
