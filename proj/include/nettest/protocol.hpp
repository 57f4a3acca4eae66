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

#ifndef NETTEST_PROTOCOL_HPP
#define NETTEST_PROTOCOL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nettest {

// Control lines are ASCII, newline-terminated, and never longer than this.
constexpr size_t kMaxControlLine = 256;

constexpr std::string_view kProtocolVersion = "NETTEST/1";

constexpr size_t kMinChunkSize = 64;
constexpr size_t kDefaultChunkSize = 4096;

// Last byte of each chunk: kChunkMore on intermediate chunks, kChunkFinal
// on exactly the last chunk of a stream.
constexpr uint8_t kChunkMore = 0x00;
constexpr uint8_t kChunkFinal = 0xFF;

enum class MessageKind {
  Greeting,      // GREETING <version>
  GetChunk,      // GETCHUNK <size>
  GetTime,       // GETTIME <duration_ns> <size>
  Ping,          // PING
  Pong,          // PONG
  PingOk,        // PINGOK
  PutNoResult,   // PUTNORESULT <size>
  Put,           // PUT <duration_ns> <size>
  TimeReport,    // TIME <ns> [<cumulative_bytes>]
  Ok,            // OK
  Err,           // ERR <code>
  Quit,          // QUIT
};

struct ControlMessage {
  MessageKind kind = MessageKind::Quit;
  std::vector<uint64_t> args;
  std::string version;  // Greeting only

  bool operator==(const ControlMessage&) const = default;

  static ControlMessage greeting() {
    return {MessageKind::Greeting, {}, std::string(kProtocolVersion)};
  }
  static ControlMessage get_chunk(uint64_t size) {
    return {MessageKind::GetChunk, {size}, {}};
  }
  static ControlMessage get_time(uint64_t duration_ns, uint64_t size) {
    return {MessageKind::GetTime, {duration_ns, size}, {}};
  }
  static ControlMessage ping() { return {MessageKind::Ping, {}, {}}; }
  static ControlMessage pong() { return {MessageKind::Pong, {}, {}}; }
  static ControlMessage ok() { return {MessageKind::Ok, {}, {}}; }
  static ControlMessage quit() { return {MessageKind::Quit, {}, {}}; }
  static ControlMessage put_no_result(uint64_t size) {
    return {MessageKind::PutNoResult, {size}, {}};
  }
  static ControlMessage put(uint64_t duration_ns, uint64_t size) {
    return {MessageKind::Put, {duration_ns, size}, {}};
  }
  static ControlMessage time_report(uint64_t ns) {
    return {MessageKind::TimeReport, {ns}, {}};
  }
  static ControlMessage time_report(uint64_t ns, uint64_t cumulative_bytes) {
    return {MessageKind::TimeReport, {ns, cumulative_bytes}, {}};
  }
  static ControlMessage err(uint64_t code) {
    return {MessageKind::Err, {code}, {}};
  }
};

/// One newline-terminated ASCII line; throws ProtocolError on arity
/// mismatch.
std::string serialize_message(const ControlMessage& m);

/// Inverse of serialize_message. `line` must be a complete line including
/// the trailing newline. Throws ProtocolError naming the offending token.
ControlMessage parse_message(std::string_view line);

/// Fills `buffer` (capacity >= size) with `size` bytes of seeded
/// pseudo-random payload; the last byte is the terminator. Throws
/// ConfigError if size < kMinChunkSize.
void fill_chunk(std::span<uint8_t> buffer, size_t size, bool is_final,
                uint64_t seed);

}  // namespace nettest

#endif  // NETTEST_PROTOCOL_HPP
