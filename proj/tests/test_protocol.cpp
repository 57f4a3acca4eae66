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

#include <random>
#include <string>
#include <vector>

#include "nettest/error.hpp"
#include "nettest/protocol.hpp"

using namespace nettest;

namespace {

ControlMessage random_valid_message(std::mt19937_64& rng) {
  // Kinds with their argument count ranges, GREETING handled separately.
  static const std::vector<std::pair<MessageKind, std::pair<int, int>>> kinds{
      {MessageKind::Greeting, {0, 0}},    {MessageKind::GetChunk, {1, 1}},
      {MessageKind::GetTime, {2, 2}},     {MessageKind::Ping, {0, 0}},
      {MessageKind::Pong, {0, 0}},        {MessageKind::PingOk, {0, 0}},
      {MessageKind::PutNoResult, {1, 1}}, {MessageKind::Put, {2, 2}},
      {MessageKind::TimeReport, {1, 2}},  {MessageKind::Ok, {0, 0}},
      {MessageKind::Err, {1, 1}},         {MessageKind::Quit, {0, 0}},
  };
  const auto& [kind, arity] = kinds[rng() % kinds.size()];
  ControlMessage m;
  m.kind = kind;
  if (kind == MessageKind::Greeting) {
    m.version = std::string(kProtocolVersion);
    return m;
  }
  std::uniform_int_distribution<int> argc_dist(arity.first, arity.second);
  int argc = argc_dist(rng);
  for (int i = 0; i < argc; ++i) {
    // Mix small and huge values to cover both token lengths.
    uint64_t v = (rng() % 2) ? rng() % 1000 : rng();
    m.args.push_back(v);
  }
  return m;
}

}  // namespace

TEST_CASE("known lines parse to the expected messages") {
  CHECK(parse_message("PING\n") == ControlMessage::ping());
  CHECK(parse_message("PONG\n") == ControlMessage::pong());
  CHECK(parse_message("OK\n") == ControlMessage::ok());
  CHECK(parse_message("QUIT\n") == ControlMessage::quit());
  CHECK(parse_message("GETCHUNK 8192\n") == ControlMessage::get_chunk(8192));
  CHECK(parse_message("GETTIME 7000000000 4096\n") ==
        ControlMessage::get_time(7'000'000'000, 4096));
  CHECK(parse_message("TIME 1234567\n") == ControlMessage::time_report(1234567));
  CHECK(parse_message("TIME 1234567 89\n") ==
        ControlMessage::time_report(1234567, 89));
  CHECK(parse_message("PUT 15000000000 65536\n") ==
        ControlMessage::put(15'000'000'000, 65536));
  CHECK(parse_message("PUTNORESULT 64\n") == ControlMessage::put_no_result(64));
  CHECK(parse_message("ERR 2\n") == ControlMessage::err(2));
  CHECK(parse_message("PINGOK\n").kind == MessageKind::PingOk);
  CHECK(parse_message("GREETING NETTEST/1\n") == ControlMessage::greeting());
}

TEST_CASE("serialization emits canonical single-line ASCII") {
  CHECK(serialize_message(ControlMessage::ping()) == "PING\n");
  CHECK(serialize_message(ControlMessage::get_chunk(0)) == "GETCHUNK 0\n");
  CHECK(serialize_message(ControlMessage::get_time(1, 2)) == "GETTIME 1 2\n");
  CHECK(serialize_message(ControlMessage::greeting()) ==
        "GREETING NETTEST/1\n");
  CHECK(serialize_message(ControlMessage::time_report(5, 6)) == "TIME 5 6\n");
}

TEST_CASE("round trip holds for randomized valid messages") {
  std::mt19937_64 rng(20260823);
  for (int i = 0; i < 20000; ++i) {
    ControlMessage m = random_valid_message(rng);
    std::string line = serialize_message(m);
    REQUIRE(line.size() <= kMaxControlLine);
    REQUIRE(line.back() == '\n');
    ControlMessage back = parse_message(line);
    REQUIRE(back == m);
    // A parsed line re-serializes byte-identically (canonical form).
    REQUIRE(serialize_message(back) == line);
  }
}

TEST_CASE("malformed lines are rejected") {
  auto bad = [](const std::string& line) {
    CHECK_THROWS_AS(parse_message(line), ProtocolError);
  };
  bad("");                            // empty
  bad("PING");                        // missing newline
  bad("\n");                          // empty body
  bad("FOO\n");                       // unknown verb
  bad("ping\n");                      // verbs are case-sensitive
  bad("PING 3\n");                    // arity too high
  bad("GETCHUNK\n");                  // arity too low
  bad("GETTIME 1\n");                 // arity too low
  bad("TIME 1 2 3\n");                // arity too high
  bad("GETCHUNK 01\n");               // non-canonical leading zero
  bad("GETCHUNK -1\n");               // negative
  bad("GETCHUNK 1.5\n");              // non-integer
  bad("GETCHUNK 99999999999999999999999\n");  // overflow
  bad("GETCHUNK  4096\n");            // doubled space
  bad("GETCHUNK 4096 \n");            // trailing space
  bad("GREETING\n");                  // missing version token
  bad("GREETING NETTEST/1 x\n");      // extra token
  bad("PING\r\n");                    // stray carriage return
  bad(std::string(300, 'A') + "\n");  // over the line-length bound
}

TEST_CASE("serializer rejects arity and version misuse") {
  ControlMessage m = ControlMessage::ping();
  m.args.push_back(1);
  CHECK_THROWS_AS(serialize_message(m), ProtocolError);

  ControlMessage g = ControlMessage::greeting();
  g.version = "has space";
  CHECK_THROWS_AS(serialize_message(g), ProtocolError);

  ControlMessage ok = ControlMessage::ok();
  ok.version = "NETTEST/1";
  CHECK_THROWS_AS(serialize_message(ok), ProtocolError);
}

TEST_CASE("fill_chunk terminators, determinism and bounds") {
  std::vector<uint8_t> a(4096), b(4096);
  fill_chunk(a, a.size(), false, 7);
  fill_chunk(b, b.size(), false, 7);
  CHECK(a == b);
  CHECK(a.back() == kChunkMore);

  fill_chunk(b, b.size(), true, 7);
  CHECK(b.back() == kChunkFinal);
  // Payload bytes are unaffected by the terminator choice.
  CHECK(std::equal(a.begin(), a.end() - 1, b.begin()));

  std::vector<uint8_t> c(4096);
  fill_chunk(c, c.size(), false, 8);
  CHECK(a != c);  // seed changes the payload

  std::vector<uint8_t> tiny(16);
  CHECK_THROWS_AS(fill_chunk(tiny, tiny.size(), false, 1), ConfigError);
  std::vector<uint8_t> small(63);
  CHECK_THROWS_AS(fill_chunk(small, small.size(), false, 1), ConfigError);
  CHECK_THROWS_AS(fill_chunk(small, 64, false, 1), ConfigError);
}
