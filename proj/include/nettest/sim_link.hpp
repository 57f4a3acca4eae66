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

#ifndef NETTEST_SIM_LINK_HPP
#define NETTEST_SIM_LINK_HPP

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <utility>

#include "nettest/clock.hpp"
#include "nettest/stream.hpp"

namespace nettest {

/// Declarative description of an emulated bottleneck link.
struct LinkModel {
  double capacity_bps = 10e6;  // shared across all flows, per direction
  std::optional<double> per_flow_cap_bps;
  int64_t one_way_delay_ns = 10 * kNanosPerMilli;
  int64_t delay_jitter_ns = 0;
  double loss_rate = 0.0;  // probability a segment needs a retransmission

  // Sinusoidal capacity modulation: c(t) = capacity*(1 + amplitude*sin(...)).
  struct Diurnal {
    double period_hours = 24.0;
    double amplitude = 0.0;  // [0, 1)
  };
  std::optional<Diurnal> diurnal;

  // Per-flow rate ramp that doubles every RTT, restarting after idle gaps.
  // Mimics congestion-window growth without modeling TCP itself.
  struct SlowStart {
    double initial_bps = 500e3;
  };
  std::optional<SlowStart> slow_start;

  uint64_t seed = 1;
  int64_t buffer_bytes = 128 * 1024;  // in-flight bound (backpressure)

  void validate() const;

  int64_t rtt_ns() const { return 2 * one_way_delay_ns; }

  /// Shared capacity at absolute virtual time t, with diurnal modulation
  /// applied.
  double instantaneous_capacity_bps(int64_t t_ns) const;
};

class SimStream;

/// One emulated link. Endpoint pairs opened on the same ShapedLink share
/// its capacity, and its diurnal phase follows the virtual clock, so a
/// long batch sees a coherent daily pattern across runs.
///
/// All shaping state is guarded by the virtual clock's mutex; endpoint
/// pairs are usable from concurrent flow workers.
class ShapedLink {
 public:
  ShapedLink(const LinkModel& model, VirtualClock& clock);
  ~ShapedLink();
  ShapedLink(const ShapedLink&) = delete;
  ShapedLink& operator=(const ShapedLink&) = delete;

  /// Connected (client, server) stream pair over this link.
  std::pair<std::unique_ptr<Stream>, std::unique_ptr<Stream>>
  open_endpoints();

  VirtualClock& clock() { return clock_; }
  const LinkModel& model() const { return model_; }

  // Totals over the link lifetime, for conservation checks.
  int64_t total_bytes_written() const;
  int64_t total_bytes_read() const;

 private:
  friend class SimStream;

  struct Segment {
    int64_t delivery_ns;
    std::vector<uint8_t> data;
    size_t offset = 0;
  };

  // One direction of one endpoint pair.
  struct Pipe {
    std::deque<Segment> segments;
    int64_t unread_bytes = 0;
    bool writer_closed = false;
    bool reader_closed = false;
    int64_t flow_busy_until_ns = 0;
    int64_t ramp_ref_ns = 0;  // slow-start ramp reference time
    double last_segment_bits = 0;
    int64_t last_delivery_ns = 0;
    uint64_t version = 0;  // bumped on every write or close
  };

  struct Direction {
    // Disjoint, merged [start, end) intervals where the shared
    // transmitter is reserved. Segments claim the earliest free line
    // time at or after their flow-stage release, so concurrent flows
    // interleave by readiness rather than by writer scheduling order.
    std::map<int64_t, int64_t> busy;
  };

  // Up: client->server, down: server->client.
  enum { kUp = 0, kDown = 1 };

  // All methods below require clock_.mutex() held.
  int64_t schedule_segment(Pipe& pipe, Direction& dir, int64_t now_ns,
                           size_t bytes);
  int64_t reserve_shared(Direction& dir, int64_t avail_ns, double bits);
  double flow_rate_bps(const Pipe& pipe, int64_t t_ns) const;

  LinkModel model_;
  VirtualClock& clock_;
  Direction directions_[2];
  std::mt19937_64 rng_;
  int64_t total_written_ = 0;
  int64_t total_read_ = 0;
  std::vector<std::shared_ptr<Pipe>> pipes_;
};

}  // namespace nettest

#endif  // NETTEST_SIM_LINK_HPP
