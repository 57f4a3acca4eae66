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

#include "nettest/path_probe.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/ip_icmp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#ifdef __linux__
#include <linux/errqueue.h>
#endif

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nettest/error.hpp"

namespace nettest {

namespace {

constexpr uint16_t kProbeBasePort = 33434;

std::optional<uint32_t> parse_ipv4(const std::string& address) {
  in_addr addr{};
  if (inet_pton(AF_INET, address.c_str(), &addr) != 1) return std::nullopt;
  return ntohl(addr.s_addr);
}

int64_t mono_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

bool is_private_ipv4(const std::string& address) {
  auto ip = parse_ipv4(address);
  if (!ip) return false;
  uint32_t v = *ip;
  return (v >> 24) == 10 ||                        // 10/8
         (v >> 24) == 127 ||                       // loopback
         (v >> 20) == (172u << 4 | 1) ||           // 172.16/12
         (v >> 16) == (192u << 8 | 168) ||         // 192.168/16
         (v >> 16) == (169u << 8 | 254);           // link-local
}

AsnDatabase AsnDatabase::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open ASN database " + file.string());
  AsnDatabase db;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string cidr;
    uint32_t asn = 0;
    if (!(ss >> cidr >> asn)) {
      throw SchemaError(file.string() + ":" + std::to_string(lineno) +
                        ": expected '<prefix>/<len> <asn>'");
    }
    db.add_prefix(cidr, asn);
  }
  return db;
}

void AsnDatabase::add_prefix(const std::string& cidr, uint32_t asn) {
  size_t slash = cidr.find('/');
  if (slash == std::string::npos) {
    throw SchemaError("prefix missing '/': " + cidr);
  }
  auto network = parse_ipv4(cidr.substr(0, slash));
  int len = std::stoi(cidr.substr(slash + 1));
  if (!network || len < 0 || len > 32) {
    throw SchemaError("bad IPv4 prefix: " + cidr);
  }
  uint32_t mask = len == 0 ? 0 : ~uint32_t(0) << (32 - len);
  entries_.push_back({*network & mask, len, asn});
}

std::optional<uint32_t> AsnDatabase::lookup(const std::string& address) const {
  auto ip = parse_ipv4(address);
  if (!ip || is_private_ipv4(address)) return std::nullopt;
  std::optional<uint32_t> best;
  int best_len = -1;
  for (const auto& e : entries_) {
    uint32_t mask = e.prefix_len == 0 ? 0 : ~uint32_t(0) << (32 - e.prefix_len);
    if ((*ip & mask) == e.network && e.prefix_len > best_len) {
      best = e.asn;
      best_len = e.prefix_len;
    }
  }
  return best;
}

std::vector<TracerouteHop> annotate_asn(std::vector<TracerouteHop> hops,
                                        const AsnDatabase& db) {
  for (auto& hop : hops) {
    if (hop.address) hop.asn = db.lookup(*hop.address);
  }
  return hops;
}

TraceResult trace_path(const std::string& target, int max_ttl,
                       int probes_per_hop, int64_t probe_timeout_ns) {
  TraceResult result;
  result.target = target;
#ifndef __linux__
  result.status = "traceroute unsupported on this platform";
  return result;
#else
  if (max_ttl < 1 || probes_per_hop < 1) {
    result.status = "invalid probe parameters";
    return result;
  }

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(target.c_str(), nullptr, &hints, &res) != 0 ||
      res == nullptr) {
    result.status = "cannot resolve target";
    return result;
  }
  sockaddr_in dest = *reinterpret_cast<sockaddr_in*>(res->ai_addr);
  freeaddrinfo(res);
  char dest_str[INET_ADDRSTRLEN] = {0};
  inet_ntop(AF_INET, &dest.sin_addr, dest_str, sizeof(dest_str));

  int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) {
    result.status = "cannot create probe socket";
    return result;
  }
  int on = 1;
  if (setsockopt(fd, IPPROTO_IP, IP_RECVERR, &on, sizeof(on)) != 0) {
    ::close(fd);
    result.status = "IP_RECVERR unavailable";
    return result;
  }

  int timeout_ms = static_cast<int>(probe_timeout_ns / 1'000'000);
  bool reached = false;
  for (int ttl = 1; ttl <= max_ttl && !reached; ++ttl) {
    TracerouteHop hop;
    hop.ttl = ttl;
    setsockopt(fd, IPPROTO_IP, IP_TTL, &ttl, sizeof(ttl));
    for (int probe = 0; probe < probes_per_hop && !hop.address; ++probe) {
      sockaddr_in to = dest;
      to.sin_port = htons(kProbeBasePort + static_cast<uint16_t>(ttl));
      const char payload[] = "nettest-probe";
      int64_t t_send = mono_us();
      if (sendto(fd, payload, sizeof(payload), 0,
                 reinterpret_cast<sockaddr*>(&to), sizeof(to)) < 0) {
        continue;
      }
      pollfd pfd{fd, POLLIN | POLLERR, 0};
      if (::poll(&pfd, 1, timeout_ms) <= 0) continue;

      // The ICMP error (TTL exceeded / port unreachable) comes back on
      // the error queue with the reporting hop's address attached.
      char cbuf[512];
      char dbuf[512];
      iovec iov{dbuf, sizeof(dbuf)};
      msghdr msg{};
      sockaddr_in from{};
      msg.msg_name = &from;
      msg.msg_namelen = sizeof(from);
      msg.msg_iov = &iov;
      msg.msg_iovlen = 1;
      msg.msg_control = cbuf;
      msg.msg_controllen = sizeof(cbuf);
      ssize_t n = recvmsg(fd, &msg, MSG_ERRQUEUE);
      if (n < 0) continue;
      int64_t rtt = mono_us() - t_send;
      for (cmsghdr* cm = CMSG_FIRSTHDR(&msg); cm != nullptr;
           cm = CMSG_NXTHDR(&msg, cm)) {
        if (cm->cmsg_level != IPPROTO_IP || cm->cmsg_type != IP_RECVERR) {
          continue;
        }
        auto* err = reinterpret_cast<sock_extended_err*>(CMSG_DATA(cm));
        if (err->ee_origin != SO_EE_ORIGIN_ICMP) continue;
        auto* offender = reinterpret_cast<sockaddr_in*>(SO_EE_OFFENDER(err));
        char addr_str[INET_ADDRSTRLEN] = {0};
        if (offender->sin_family == AF_INET) {
          inet_ntop(AF_INET, &offender->sin_addr, addr_str, sizeof(addr_str));
          hop.address = addr_str;
          hop.rtt_us = rtt;
        }
        if (err->ee_type == ICMP_DEST_UNREACH ||
            (hop.address && *hop.address == dest_str)) {
          reached = true;
        }
      }
    }
    result.hops.push_back(std::move(hop));
  }
  ::close(fd);
  result.status = "ok";
  return result;
#endif
}

}  // namespace nettest
