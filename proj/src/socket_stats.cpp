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

#include "nettest/socket_stats.hpp"

#include <algorithm>
#include <cstddef>
#include <mutex>
#include <utility>

#ifdef __linux__
// linux/tcp.h rather than netinet/tcp.h: the glibc tcp_info stops short
// of the byte counters.
#include <linux/tcp.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>
#endif

#include "nettest/error.hpp"

namespace nettest {

bool socket_stats_supported() {
#ifdef __linux__
  static std::once_flag once;
  static bool supported = false;
  std::call_once(once, [] {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) return;
    tcp_info info{};
    socklen_t len = sizeof(info);
    supported = ::getsockopt(fd, IPPROTO_TCP, TCP_INFO, &info, &len) == 0;
    ::close(fd);
  });
  return supported;
#else
  return false;
#endif
}

SocketStatsSample sample_flow(int fd, int flow_id, int64_t t_now_ns) {
  SocketStatsSample sample;
  sample.flow_id = flow_id;
  sample.t_ns = t_now_ns;
#ifdef __linux__
  if (!socket_stats_supported()) return sample;
  tcp_info info{};
  socklen_t len = sizeof(info);
  if (::getsockopt(fd, IPPROTO_TCP, TCP_INFO, &info, &len) != 0) {
    return sample;
  }
  sample.rtt_us = info.tcpi_rtt;
  sample.rtt_var_us = info.tcpi_rttvar;
  sample.retransmits_total = info.tcpi_total_retrans;
  sample.slow_start_threshold = info.tcpi_snd_ssthresh;
  sample.congestion_window = info.tcpi_snd_cwnd;
  if (len >= offsetof(tcp_info, tcpi_bytes_acked) +
                 sizeof(info.tcpi_bytes_acked)) {
    sample.bytes_acked = static_cast<int64_t>(info.tcpi_bytes_acked);
  }
#else
  (void)fd;
#endif
  return sample;
}

StatsSampler::StatsSampler(int fd, int flow_id, std::string stage,
                           int64_t interval_ns, Clock& clock)
    : fd_(fd),
      flow_id_(flow_id),
      stage_(std::move(stage)),
      interval_ns_(interval_ns),
      clock_(clock) {
  if (interval_ns_ < kNanosPerMilli) {
    throw ConfigError("stats interval must be >= 1 ms");
  }
}

void StatsSampler::run() {
  int64_t t0 = clock_.now_ns();
  int64_t next = t0;
  while (!stop_.load()) {
    int64_t now = clock_.now_ns();
    if (now >= next) {
      SocketStatsSample s = sample_flow(fd_, flow_id_, now - t0);
      s.stage = stage_;
      samples_.push_back(std::move(s));
      next += interval_ns_;
    }
    // Short naps so stop() takes effect promptly.
    int64_t nap = std::min<int64_t>(next - clock_.now_ns(), 5 * kNanosPerMilli);
    if (nap > 0) clock_.sleep_for(nap);
  }
}

}  // namespace nettest
