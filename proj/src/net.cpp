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

#include "nettest/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "nettest/error.hpp"

namespace nettest {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw IoError(what + ": " + std::strerror(errno));
}

struct AddrInfoHolder {
  addrinfo* res = nullptr;
  ~AddrInfoHolder() {
    if (res) freeaddrinfo(res);
  }
};

}  // namespace

TcpStream::TcpStream(int fd) : fd_(fd) {
  int one = 1;
  setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpStream::~TcpStream() { close(); }

std::unique_ptr<TcpStream> TcpStream::connect(const std::string& host,
                                              uint16_t port) {
  AddrInfoHolder holder;
  addrinfo hints{};
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_family = AF_UNSPEC;
  std::string service = std::to_string(port);
  int rc = getaddrinfo(host.c_str(), service.c_str(), &hints, &holder.res);
  if (rc != 0) {
    throw IoError("resolve '" + host + "': " + gai_strerror(rc));
  }
  int last_errno = 0;
  for (addrinfo* ai = holder.res; ai != nullptr; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      last_errno = errno;
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      return std::make_unique<TcpStream>(fd);
    }
    last_errno = errno;
    ::close(fd);
  }
  errno = last_errno;
  throw_errno("connect to " + host + ":" + service);
}

ptrdiff_t TcpStream::read_some(std::span<uint8_t> buf,
                               std::optional<int64_t> timeout_ns) {
  if (fd_ < 0) throw IoError("read on closed stream");
  if (timeout_ns) {
    pollfd pfd{fd_, POLLIN, 0};
    int timeout_ms = static_cast<int>((*timeout_ns + 999'999) / 1'000'000);
    int rc = ::poll(&pfd, 1, timeout_ms);
    if (rc < 0) throw_errno("poll");
    if (rc == 0) return kTimedOut;
  }
  for (;;) {
    ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n >= 0) return n;
    if (errno == EINTR) continue;
    throw_errno("recv");
  }
}

void TcpStream::write_all(std::span<const uint8_t> data) {
  if (fd_ < 0) throw IoError("write on closed stream");
  size_t sent = 0;
  while (sent < data.size()) {
    ssize_t n =
        ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("send");
    }
    sent += static_cast<size_t>(n);
  }
}

void TcpStream::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

std::optional<int> TcpStream::native_handle() const {
  if (fd_ < 0) return std::nullopt;
  return fd_;
}

std::string TcpStream::peer_address() const {
  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  if (fd_ < 0 ||
      getpeername(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    return {};
  }
  char buf[INET6_ADDRSTRLEN] = {0};
  if (addr.ss_family == AF_INET) {
    auto* in4 = reinterpret_cast<sockaddr_in*>(&addr);
    inet_ntop(AF_INET, &in4->sin_addr, buf, sizeof(buf));
  } else if (addr.ss_family == AF_INET6) {
    auto* in6 = reinterpret_cast<sockaddr_in6*>(&addr);
    inet_ntop(AF_INET6, &in6->sin6_addr, buf, sizeof(buf));
  }
  return buf;
}

TcpListener::TcpListener(const std::string& host, uint16_t port) : fd_(-1) {
  AddrInfoHolder holder;
  addrinfo hints{};
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_family = AF_UNSPEC;
  hints.ai_flags = AI_PASSIVE;
  std::string service = std::to_string(port);
  int rc = getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(),
                       &hints, &holder.res);
  if (rc != 0) {
    throw IoError("resolve '" + host + "': " + gai_strerror(rc));
  }
  for (addrinfo* ai = holder.res; ai != nullptr; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
      fd_ = fd;
      break;
    }
    ::close(fd);
  }
  if (fd_ < 0) {
    throw IoError("cannot bind " + host + ":" + service);
  }
  sockaddr_storage bound{};
  socklen_t len = sizeof(bound);
  getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  if (bound.ss_family == AF_INET) {
    port_ = ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
  } else {
    port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port);
  }
}

TcpListener::~TcpListener() { close(); }

std::unique_ptr<TcpStream> TcpListener::accept() {
  for (;;) {
    int fd = fd_;
    if (fd < 0) return nullptr;
    pollfd pfd{fd, POLLIN, 0};
    int rc = ::poll(&pfd, 1, 200);
    if (rc < 0) {
      if (errno == EINTR) continue;
      return nullptr;
    }
    if (fd_ < 0) return nullptr;
    if (rc == 0) continue;
    int conn = ::accept(fd, nullptr, nullptr);
    if (conn < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      return nullptr;
    }
    return std::make_unique<TcpStream>(conn);
  }
}

void TcpListener::close() {
  if (fd_ >= 0) {
    int fd = fd_;
    fd_ = -1;
    ::close(fd);
  }
}

std::string resolve_host(const std::string& host) {
  AddrInfoHolder holder;
  addrinfo hints{};
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_family = AF_UNSPEC;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &holder.res) != 0 ||
      holder.res == nullptr) {
    return {};
  }
  char buf[INET6_ADDRSTRLEN] = {0};
  addrinfo* ai = holder.res;
  if (ai->ai_family == AF_INET) {
    auto* in4 = reinterpret_cast<sockaddr_in*>(ai->ai_addr);
    inet_ntop(AF_INET, &in4->sin_addr, buf, sizeof(buf));
  } else if (ai->ai_family == AF_INET6) {
    auto* in6 = reinterpret_cast<sockaddr_in6*>(ai->ai_addr);
    inet_ntop(AF_INET6, &in6->sin6_addr, buf, sizeof(buf));
  }
  return buf;
}

}  // namespace nettest
