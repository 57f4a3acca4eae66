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

#include "nettest/server.hpp"

#include <cstdio>
#include <vector>

#include "nettest/error.hpp"
#include "nettest/protocol.hpp"

namespace nettest {

namespace {

// ERR codes on the wire.
constexpr uint64_t kErrParse = 1;
constexpr uint64_t kErrBadState = 2;
constexpr uint64_t kErrBadArgs = 3;

void send_err(Stream& stream, uint64_t code) {
  try {
    write_line(stream, serialize_message(ControlMessage::err(code)));
  } catch (const Error&) {
    // Peer already gone; nothing left to report.
  }
}

void serve_chunk_stream(Stream& stream, Clock& clock, uint64_t duration_ns,
                        uint64_t size, uint64_t seed) {
  std::vector<uint8_t> chunk(size);
  int64_t t0 = clock.now_ns();
  uint64_t chunk_index = 0;
  while (clock.now_ns() - t0 < static_cast<int64_t>(duration_ns)) {
    fill_chunk(chunk, size, false, seed + chunk_index++);
    stream.write_all(chunk);
  }
  fill_chunk(chunk, size, true, seed + chunk_index);
  stream.write_all(chunk);
}

// Receives chunks of `size` bytes until the final-terminator chunk, sending
// one TIME receipt per complete chunk. Timestamps are a monotonic clock
// zeroed at the PUT message.
void receive_uplink(Stream& stream, Clock& clock, uint64_t size,
                    int64_t idle_timeout_ns) {
  std::vector<uint8_t> chunk(size);
  int64_t t0 = clock.now_ns();
  uint64_t cumulative = 0;
  int64_t prev_t = 0;
  for (;;) {
    read_exact(stream, chunk, idle_timeout_ns);
    cumulative += size;
    int64_t t = clock.now_ns() - t0;
    if (t <= prev_t) t = prev_t + 1;  // receipts strictly increasing
    prev_t = t;
    write_line(stream, serialize_message(ControlMessage::time_report(
                           static_cast<uint64_t>(t), cumulative)));
    if (chunk[size - 1] == kChunkFinal) return;
    if (chunk[size - 1] != kChunkMore) {
      throw ProtocolError("bad chunk terminator byte");
    }
  }
}

}  // namespace

void ServerConfig::validate() const {
  if (max_concurrent_flows < 1) {
    throw ConfigError("max_concurrent_flows must be >= 1");
  }
  // listen_port 0 is allowed: the OS picks an ephemeral port.
  if (idle_timeout_ns <= 0) throw ConfigError("idle timeout must be positive");
}

void handle_connection(Stream& stream, const ServerConfig& config,
                       Clock& clock) {
  uint64_t stream_seed = config.chunk_seed;
  for (;;) {
    std::string line;
    try {
      line = read_line(stream, config.idle_timeout_ns);
    } catch (const IoError&) {
      return;  // EOF or idle timeout
    } catch (const ProtocolError&) {
      send_err(stream, kErrParse);
      return;
    }
    ControlMessage msg;
    try {
      msg = parse_message(line);
    } catch (const ProtocolError&) {
      send_err(stream, kErrParse);
      return;
    }
    try {
      switch (msg.kind) {
        case MessageKind::Greeting:
          if (msg.version != kProtocolVersion) {
            send_err(stream, kErrBadArgs);
            return;
          }
          write_line(stream, serialize_message(ControlMessage::greeting()));
          break;
        case MessageKind::GetChunk: {
          uint64_t size = msg.args[0];
          if (size < kMinChunkSize) {
            send_err(stream, kErrBadArgs);
            return;
          }
          std::vector<uint8_t> chunk(size);
          fill_chunk(chunk, size, true, stream_seed++);
          stream.write_all(chunk);
          break;
        }
        case MessageKind::GetTime: {
          uint64_t duration_ns = msg.args[0];
          uint64_t size = msg.args[1];
          if (size < kMinChunkSize || duration_ns == 0) {
            send_err(stream, kErrBadArgs);
            return;
          }
          serve_chunk_stream(stream, clock, duration_ns, size, stream_seed);
          stream_seed += duration_ns;  // keep payloads fresh across phases
          break;
        }
        case MessageKind::Ping:
          write_line(stream, serialize_message(ControlMessage::pong()));
          break;
        case MessageKind::PingOk:
          write_line(stream, serialize_message(ControlMessage::ok()));
          break;
        case MessageKind::PutNoResult: {
          uint64_t size = msg.args[0];
          if (size < kMinChunkSize) {
            send_err(stream, kErrBadArgs);
            return;
          }
          write_line(stream, serialize_message(ControlMessage::ok()));
          std::vector<uint8_t> chunk(size);
          read_exact(stream, chunk, config.idle_timeout_ns);
          write_line(stream, serialize_message(ControlMessage::ok()));
          break;
        }
        case MessageKind::Put: {
          uint64_t size = msg.args[1];
          if (size < kMinChunkSize) {
            send_err(stream, kErrBadArgs);
            return;
          }
          write_line(stream, serialize_message(ControlMessage::ok()));
          receive_uplink(stream, clock, size, config.idle_timeout_ns);
          break;
        }
        case MessageKind::Quit:
          stream.close();
          return;
        default:
          // A server never expects PONG/OK/TIME/ERR from a client.
          send_err(stream, kErrBadState);
          return;
      }
    } catch (const IoError&) {
      return;
    } catch (const ProtocolError&) {
      send_err(stream, kErrParse);
      return;
    }
  }
}

Server::Server(const ServerConfig& config)
    : config_(config), listener_(config.listen_host, config.listen_port) {
  config_.validate();
}

Server::~Server() { stop(); }

uint16_t Server::port() const { return listener_.port(); }

void Server::serve() { accept_loop(); }

void Server::start() {
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
  if (stopping_.exchange(true)) return;
  listener_.close();
  if (accept_thread_.joinable()) accept_thread_.join();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
}

void Server::accept_loop() {
  while (!stopping_) {
    auto conn = listener_.accept();
    if (!conn) break;
    if (active_connections_.load() >= config_.max_concurrent_flows) {
      conn->close();  // over capacity; shed load
      continue;
    }
    ++active_connections_;
    workers_.emplace_back(
        [this, stream = std::shared_ptr<TcpStream>(std::move(conn))] {
          try {
            handle_connection(*stream, config_, clock_);
          } catch (const std::exception& e) {
            std::fprintf(stderr, "[server] connection error: %s\n", e.what());
          }
          --active_connections_;
        });
  }
}

}  // namespace nettest
