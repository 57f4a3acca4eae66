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

#ifndef NETTEST_NET_HPP
#define NETTEST_NET_HPP

#include <cstdint>
#include <memory>
#include <string>

#include "nettest/stream.hpp"

namespace nettest {

/// TCP stream over a connected socket. TCP_NODELAY is set so control-line
/// exchanges are not delayed by Nagle.
class TcpStream final : public Stream {
 public:
  explicit TcpStream(int fd);
  ~TcpStream() override;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;

  static std::unique_ptr<TcpStream> connect(const std::string& host,
                                            uint16_t port);

  ptrdiff_t read_some(std::span<uint8_t> buf,
                      std::optional<int64_t> timeout_ns) override;
  void write_all(std::span<const uint8_t> data) override;
  void close() override;
  std::optional<int> native_handle() const override;

  std::string peer_address() const;

 private:
  int fd_;
};

class TcpListener {
 public:
  TcpListener(const std::string& host, uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  /// Blocks until a connection arrives or the listener is closed (then
  /// returns nullptr).
  std::unique_ptr<TcpStream> accept();

  /// Unblocks pending accept() calls; safe from another thread.
  void close();

  uint16_t port() const { return port_; }

 private:
  int fd_;
  uint16_t port_;
};

/// Resolves `host` to a numeric address string (first A/AAAA result).
std::string resolve_host(const std::string& host);

}  // namespace nettest

#endif  // NETTEST_NET_HPP
