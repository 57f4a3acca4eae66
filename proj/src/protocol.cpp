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

#include "nettest/protocol.hpp"

#include <array>
#include <charconv>

#include "nettest/error.hpp"

namespace nettest {

namespace {

struct VerbInfo {
  MessageKind kind;
  std::string_view verb;
  int min_args;
  int max_args;
};

constexpr std::array<VerbInfo, 12> kVerbs{{
    {MessageKind::Greeting, "GREETING", 0, 0},  // version handled apart
    {MessageKind::GetChunk, "GETCHUNK", 1, 1},
    {MessageKind::GetTime, "GETTIME", 2, 2},
    {MessageKind::Ping, "PING", 0, 0},
    {MessageKind::Pong, "PONG", 0, 0},
    {MessageKind::PingOk, "PINGOK", 0, 0},
    {MessageKind::PutNoResult, "PUTNORESULT", 1, 1},
    {MessageKind::Put, "PUT", 2, 2},
    {MessageKind::TimeReport, "TIME", 1, 2},
    {MessageKind::Ok, "OK", 0, 0},
    {MessageKind::Err, "ERR", 1, 1},
    {MessageKind::Quit, "QUIT", 0, 0},
}};

const VerbInfo& info_for(MessageKind kind) {
  for (const auto& v : kVerbs) {
    if (v.kind == kind) return v;
  }
  throw ProtocolError("unknown message kind");
}

const VerbInfo* info_for(std::string_view verb) {
  for (const auto& v : kVerbs) {
    if (v.verb == verb) return &v;
  }
  return nullptr;
}

uint64_t parse_uint(std::string_view token) {
  // Leading zeros are rejected so every parsable line is already in
  // canonical (re-serializable) form.
  if (token.size() > 1 && token.front() == '0') {
    throw ProtocolError("non-canonical number: '" + std::string(token) + "'");
  }
  uint64_t value = 0;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ProtocolError("non-numeric argument: '" + std::string(token) + "'");
  }
  return value;
}

std::vector<std::string_view> split_tokens(std::string_view s) {
  std::vector<std::string_view> tokens;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t space = s.find(' ', pos);
    if (space == std::string_view::npos) space = s.size();
    if (space == pos) {
      throw ProtocolError("empty token (doubled or trailing space)");
    }
    tokens.push_back(s.substr(pos, space - pos));
    pos = space + 1;
  }
  if (!s.empty() && s.back() == ' ') {
    throw ProtocolError("empty token (doubled or trailing space)");
  }
  return tokens;
}

}  // namespace

std::string serialize_message(const ControlMessage& m) {
  const VerbInfo& info = info_for(m.kind);
  std::string line(info.verb);
  if (m.kind == MessageKind::Greeting) {
    if (m.version.empty() ||
        m.version.find_first_of(" \n") != std::string::npos) {
      throw ProtocolError("invalid greeting version token");
    }
    if (!m.args.empty()) {
      throw ProtocolError("GREETING takes no numeric arguments");
    }
    line += ' ';
    line += m.version;
  } else {
    if (!m.version.empty()) {
      throw ProtocolError("version field only valid on GREETING");
    }
    int argc = static_cast<int>(m.args.size());
    if (argc < info.min_args || argc > info.max_args) {
      throw ProtocolError(std::string(info.verb) + ": bad argument count " +
                          std::to_string(argc));
    }
    for (uint64_t a : m.args) {
      line += ' ';
      line += std::to_string(a);
    }
  }
  line += '\n';
  if (line.size() > kMaxControlLine) {
    throw ProtocolError("control line exceeds 256 bytes");
  }
  return line;
}

ControlMessage parse_message(std::string_view line) {
  if (line.size() > kMaxControlLine) {
    throw ProtocolError("control line exceeds 256 bytes");
  }
  if (line.empty() || line.back() != '\n') {
    throw ProtocolError("control line missing trailing newline");
  }
  std::string_view body = line.substr(0, line.size() - 1);
  for (char c : body) {
    if (c < 0x20 || c > 0x7E) {
      throw ProtocolError("non-printable byte in control line");
    }
  }
  auto tokens = split_tokens(body);
  if (tokens.empty()) throw ProtocolError("empty control line");

  const VerbInfo* info = info_for(tokens[0]);
  if (info == nullptr) {
    throw ProtocolError("unknown verb: '" + std::string(tokens[0]) + "'");
  }

  ControlMessage m;
  m.kind = info->kind;
  if (m.kind == MessageKind::Greeting) {
    if (tokens.size() != 2) {
      throw ProtocolError("GREETING: expected exactly one version token");
    }
    m.version = std::string(tokens[1]);
    return m;
  }
  int argc = static_cast<int>(tokens.size()) - 1;
  if (argc < info->min_args || argc > info->max_args) {
    throw ProtocolError(std::string(info->verb) + ": bad argument count " +
                        std::to_string(argc));
  }
  m.args.reserve(argc);
  for (size_t i = 1; i < tokens.size(); ++i) {
    m.args.push_back(parse_uint(tokens[i]));
  }
  return m;
}

void fill_chunk(std::span<uint8_t> buffer, size_t size, bool is_final,
                uint64_t seed) {
  if (size < kMinChunkSize) {
    throw ConfigError("chunk size below minimum of 64 bytes");
  }
  if (buffer.size() < size) {
    throw ConfigError("chunk buffer smaller than requested size");
  }
  // splitmix64 keeps the payload incompressible and cheap to generate.
  uint64_t state = seed;
  size_t i = 0;
  while (i + 1 < size) {
    state += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    for (int b = 0; b < 8 && i + 1 < size; ++b, ++i) {
      buffer[i] = static_cast<uint8_t>(z >> (8 * b));
    }
  }
  buffer[size - 1] = is_final ? kChunkFinal : kChunkMore;
}

}  // namespace nettest
