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

#ifndef NETTEST_STREAM_HPP
#define NETTEST_STREAM_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "nettest/protocol.hpp"

namespace nettest {

/// Reliable byte stream. Real TCP sockets and emulated shaped links both
/// implement this, so the client and server state machines run over either
/// transport unchanged.
class Stream {
 public:
  // read_some sentinel: the timeout expired before any byte arrived.
  static constexpr ptrdiff_t kTimedOut = -1;

  virtual ~Stream() = default;

  /// Reads at least one byte into `buf` unless the peer closed (returns 0)
  /// or `timeout_ns` elapsed first (returns kTimedOut). No timeout means
  /// block until data or EOF.
  virtual ptrdiff_t read_some(std::span<uint8_t> buf,
                              std::optional<int64_t> timeout_ns) = 0;

  /// Writes the whole buffer, blocking as needed. Throws IoError if the
  /// peer is gone.
  virtual void write_all(std::span<const uint8_t> data) = 0;

  virtual void close() = 0;

  /// OS socket descriptor, when the stream is backed by one. Used by the
  /// kernel statistics sampler.
  virtual std::optional<int> native_handle() const { return std::nullopt; }
};

/// Fills `buf` completely; throws IoError on EOF or timeout.
void read_exact(Stream& stream, std::span<uint8_t> buf,
                std::optional<int64_t> timeout_ns = std::nullopt);

/// Reads one control line (including the trailing newline) byte by byte,
/// so no stream data beyond the newline is consumed. Throws ProtocolError
/// if the line exceeds kMaxControlLine, IoError on EOF/timeout.
std::string read_line(Stream& stream,
                      std::optional<int64_t> timeout_ns = std::nullopt);

void write_line(Stream& stream, const std::string& line);

}  // namespace nettest

#endif  // NETTEST_STREAM_HPP
