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

#include "nettest/stream.hpp"

#include "nettest/error.hpp"

namespace nettest {

void read_exact(Stream& stream, std::span<uint8_t> buf,
                std::optional<int64_t> timeout_ns) {
  size_t got = 0;
  while (got < buf.size()) {
    ptrdiff_t n = stream.read_some(buf.subspan(got), timeout_ns);
    if (n == 0) throw IoError("connection closed mid-read");
    if (n == Stream::kTimedOut) throw IoError("read timed out");
    got += static_cast<size_t>(n);
  }
}

std::string read_line(Stream& stream, std::optional<int64_t> timeout_ns) {
  std::string line;
  uint8_t byte = 0;
  for (;;) {
    ptrdiff_t n = stream.read_some({&byte, 1}, timeout_ns);
    if (n == 0) throw IoError("connection closed mid-line");
    if (n == Stream::kTimedOut) throw IoError("line read timed out");
    line.push_back(static_cast<char>(byte));
    if (byte == '\n') return line;
    if (line.size() > kMaxControlLine) {
      throw ProtocolError("control line exceeds 256 bytes");
    }
  }
}

void write_line(Stream& stream, const std::string& line) {
  stream.write_all(
      {reinterpret_cast<const uint8_t*>(line.data()), line.size()});
}

}  // namespace nettest
