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

#ifndef NETTEST_PATH_PROBE_HPP
#define NETTEST_PATH_PROBE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nettest {

struct TracerouteHop {
  int ttl = 1;
  std::optional<std::string> address;  // absent: hop did not respond
  std::optional<int64_t> rtt_us;
  std::optional<uint32_t> asn;

  bool operator==(const TracerouteHop&) const = default;
};

struct TraceResult {
  std::string target;
  std::string status;  // "ok" or an error description
  std::vector<TracerouteHop> hops;

  bool ok() const { return status == "ok"; }
};

/// Offline IPv4 prefix -> ASN table, one "a.b.c.d/len asn" pair per line.
/// Lookup is longest-prefix-match; private and non-IPv4 addresses never
/// match.
class AsnDatabase {
 public:
  AsnDatabase() = default;

  /// Throws IoError if the file cannot be read, SchemaError on a bad line.
  static AsnDatabase load(const std::filesystem::path& file);

  void add_prefix(const std::string& cidr, uint32_t asn);
  std::optional<uint32_t> lookup(const std::string& address) const;
  size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    uint32_t network;
    int prefix_len;
    uint32_t asn;
  };
  std::vector<Entry> entries_;
};

/// Hop-by-hop UDP probe trace toward `target` (high-port datagrams with
/// increasing TTL; needs no raw-socket privilege on Linux). Total failure
/// yields an empty hop list with an error status; the measurement run
/// proceeds regardless.
TraceResult trace_path(const std::string& target, int max_ttl = 30,
                       int probes_per_hop = 3,
                       int64_t probe_timeout_ns = 1'000'000'000);

/// Longest-prefix-match ASN annotation. Idempotent; never touches
/// ttl/address/rtt. Private or absent addresses stay unannotated.
std::vector<TracerouteHop> annotate_asn(std::vector<TracerouteHop> hops,
                                        const AsnDatabase& db);

/// True for RFC 1918, loopback and link-local IPv4 addresses.
bool is_private_ipv4(const std::string& address);

}  // namespace nettest

#endif  // NETTEST_PATH_PROBE_HPP
