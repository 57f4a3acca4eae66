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

#ifndef NETTEST_SERVER_HPP
#define NETTEST_SERVER_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "nettest/clock.hpp"
#include "nettest/net.hpp"
#include "nettest/stream.hpp"

namespace nettest {

struct ServerConfig {
  std::string listen_host = "0.0.0.0";
  uint16_t listen_port = 5001;
  int max_concurrent_flows = 64;
  uint64_t chunk_seed = 1;
  bool accept_any_token = true;  // token checking is always off
  // Must exceed the longest phase a connection can sit out (a flow used
  // only for upload is idle for the whole timed download).
  int64_t idle_timeout_ns = 45 * kNanosPerSecond;

  void validate() const;
};

/// Runs the per-connection phase state machine over one stream until QUIT,
/// EOF, idle timeout, or a protocol violation (which draws an ERR reply
/// and closes only this connection). Used by the TCP accept loop and
/// called directly on emulated streams in tests.
void handle_connection(Stream& stream, const ServerConfig& config,
                       Clock& clock);

/// TCP measurement server: accepts connections and hands each to
/// handle_connection on its own thread. Per-connection errors are logged
/// to stderr, never fatal to the process.
class Server {
 public:
  explicit Server(const ServerConfig& config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Blocks in the accept loop until stop() is called.
  void serve();

  /// Accept loop on a background thread; returns once listening.
  void start();
  void stop();

  uint16_t port() const;

 private:
  void accept_loop();

  ServerConfig config_;
  TcpListener listener_;
  RealClock clock_;
  std::atomic<bool> stopping_{false};
  std::atomic<int> active_connections_{0};
  std::vector<std::thread> workers_;
  std::thread accept_thread_;
};

}  // namespace nettest

#endif  // NETTEST_SERVER_HPP
