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

#include "nettest/sim_link.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "nettest/error.hpp"

namespace nettest {

namespace {

constexpr size_t kSegmentBytes = 4096;
constexpr double kMaxRateBps = 1e12;  // ramp clamp

double ns_to_s(int64_t ns) { return static_cast<double>(ns) * 1e-9; }
int64_t s_to_ns(double s) { return static_cast<int64_t>(std::llround(s * 1e9)); }

// Composite Simpson over [a, b] seconds; rates are smooth on segment
// transmission scales, so a fixed subdivision is plenty.
double integrate_bps(const std::function<double(double)>& rate, double a,
                     double b) {
  constexpr int n = 8;  // even
  double h = (b - a) / n;
  double sum = rate(a) + rate(b);
  for (int i = 1; i < n; ++i) {
    sum += rate(a + i * h) * (i % 2 ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

// Earliest f >= start such that the integral of rate over [start, f]
// equals `bits`. Newton iteration with rate as the derivative.
double solve_finish_s(const std::function<double(double)>& rate, double start,
                      double bits) {
  double f = start;
  double remaining = bits;
  for (int iter = 0; iter < 200; ++iter) {
    double r = std::max(rate(f), 1.0);
    double step = remaining / r;
    if (std::fabs(step) < 1e-12) break;
    double next = std::max(start, f + step);
    remaining -= integrate_bps(rate, f, next);
    f = next;
    if (std::fabs(remaining) < std::max(1e-9 * bits, 1e-6)) break;
  }
  return f;
}

}  // namespace

void LinkModel::validate() const {
  if (capacity_bps <= 0) throw ConfigError("link capacity must be positive");
  if (per_flow_cap_bps && *per_flow_cap_bps <= 0) {
    throw ConfigError("per-flow cap must be positive");
  }
  if (one_way_delay_ns < 0 || delay_jitter_ns < 0) {
    throw ConfigError("delays must be non-negative");
  }
  if (loss_rate < 0.0 || loss_rate >= 1.0) {
    throw ConfigError("loss rate must be in [0, 1)");
  }
  if (diurnal) {
    if (diurnal->period_hours <= 0) {
      throw ConfigError("diurnal period must be positive");
    }
    if (diurnal->amplitude < 0.0 || diurnal->amplitude >= 1.0) {
      throw ConfigError("diurnal amplitude must be in [0, 1)");
    }
  }
  if (slow_start && slow_start->initial_bps <= 0) {
    throw ConfigError("slow-start initial rate must be positive");
  }
  if (buffer_bytes < static_cast<int64_t>(kMinChunkSize)) {
    throw ConfigError("link buffer too small");
  }
}

double LinkModel::instantaneous_capacity_bps(int64_t t_ns) const {
  if (!diurnal || diurnal->amplitude == 0.0) return capacity_bps;
  double period_s = diurnal->period_hours * 3600.0;
  double phase = 2.0 * M_PI * ns_to_s(t_ns) / period_s;
  return capacity_bps * (1.0 + diurnal->amplitude * std::sin(phase));
}

ShapedLink::ShapedLink(const LinkModel& model, VirtualClock& clock)
    : model_(model), clock_(clock), rng_(model.seed) {
  model_.validate();
}

ShapedLink::~ShapedLink() = default;

double ShapedLink::flow_rate_bps(const Pipe& pipe, int64_t t_ns) const {
  double r = kMaxRateBps;
  if (model_.per_flow_cap_bps) r = *model_.per_flow_cap_bps;
  if (model_.slow_start) {
    double rtt_s = std::max(ns_to_s(model_.rtt_ns()), 1e-3);
    double age_s = ns_to_s(t_ns - pipe.ramp_ref_ns);
    double exponent = std::min(age_s / rtt_s, 40.0);
    double ramp = model_.slow_start->initial_bps * std::exp2(exponent);
    r = std::min(r, ramp);
  }
  return std::min(r, kMaxRateBps);
}

int64_t ShapedLink::schedule_segment(Pipe& pipe, Direction& dir,
                                     int64_t now_ns, size_t bytes) {
  double bits = static_cast<double>(bytes) * 8.0;
  if (model_.loss_rate > 0.0) {
    std::bernoulli_distribution lost(model_.loss_rate);
    if (lost(rng_)) bits *= 2.0;  // one retransmission round
  }

  // Stage 1: per-flow shaping (cap and slow-start ramp).
  int64_t start = std::max(now_ns, pipe.flow_busy_until_ns);
  int64_t flow_finish = start;
  if (model_.slow_start || model_.per_flow_cap_bps) {
    if (model_.slow_start) {
      // Ramp restarts after an idle gap, like a congestion window
      // collapsing back when the connection goes quiet.
      int64_t idle_ns = std::max<int64_t>(model_.rtt_ns(), 200 * kNanosPerMilli);
      bool restart = pipe.flow_busy_until_ns == 0 ||
                     start > pipe.flow_busy_until_ns + idle_ns;
      if (!restart && start > pipe.flow_busy_until_ns) {
        // Congestion-window validation: a flow that sat mostly idle at its
        // current rate scale (request/response traffic such as pings) does
        // not get to keep a fully opened ramp.
        double gap_s = ns_to_s(start - pipe.flow_busy_until_ns);
        restart = gap_s * flow_rate_bps(pipe, start) >
                  4.0 * std::max(pipe.last_segment_bits, 1.0);
      }
      if (restart) pipe.ramp_ref_ns = start;
    }
    auto rate = [this, &pipe](double t_s) {
      return flow_rate_bps(pipe, s_to_ns(t_s));
    };
    flow_finish = s_to_ns(solve_finish_s(rate, ns_to_s(start), bits));
  }
  pipe.flow_busy_until_ns = std::max(flow_finish, start);
  pipe.last_segment_bits = bits;

  // Stage 2: the shared bottleneck is a capacity reservation timeline.
  // A small burst allowance hides per-segment serialization on an
  // underutilized link; under contention segments queue for line time in
  // order of readiness, independent of writer scheduling order.
  int64_t burst_ns =
      s_to_ns(8.0 * kSegmentBytes * 8.0 / model_.capacity_bps);
  int64_t horizon = now_ns - burst_ns;
  while (!dir.busy.empty() && dir.busy.begin()->second <= horizon) {
    dir.busy.erase(dir.busy.begin());
  }
  int64_t shared_finish = reserve_shared(dir, flow_finish - burst_ns, bits);

  int64_t delivery =
      std::max(flow_finish, shared_finish) + model_.one_way_delay_ns;
  if (model_.delay_jitter_ns > 0) {
    std::uniform_int_distribution<int64_t> jitter(-model_.delay_jitter_ns,
                                                  model_.delay_jitter_ns);
    delivery += jitter(rng_);
  }
  delivery = std::max(delivery, pipe.last_delivery_ns);  // in-order delivery
  pipe.last_delivery_ns = delivery;
  return delivery;
}

int64_t ShapedLink::reserve_shared(Direction& dir, int64_t avail_ns,
                                   double bits) {
  bool diurnal = model_.diurnal && model_.diurnal->amplitude > 0.0;
  auto rate = [this](double t_s) {
    return model_.instantaneous_capacity_bps(s_to_ns(t_s));
  };

  // Walk the free gaps at or after `avail_ns`, consuming line time until
  // the segment's bits fit; a segment may be fragmented across gaps.
  std::vector<std::pair<int64_t, int64_t>> pieces;
  double remaining = bits;
  int64_t t = std::max<int64_t>(avail_ns, 0);
  auto it = dir.busy.upper_bound(t);
  if (it != dir.busy.begin()) {
    auto prev = std::prev(it);
    if (prev->second > t) t = prev->second;
  }
  int64_t finish = t;
  for (;;) {
    int64_t gap_end = (it == dir.busy.end())
                          ? std::numeric_limits<int64_t>::max()
                          : it->first;
    double gap_bits = 0.0;
    if (gap_end != std::numeric_limits<int64_t>::max()) {
      gap_bits = diurnal
                     ? integrate_bps(rate, ns_to_s(t), ns_to_s(gap_end))
                     : ns_to_s(gap_end - t) * model_.capacity_bps;
    }
    if (gap_end == std::numeric_limits<int64_t>::max() ||
        gap_bits >= remaining) {
      int64_t piece_end =
          diurnal ? s_to_ns(solve_finish_s(rate, ns_to_s(t), remaining))
                  : t + s_to_ns(remaining / model_.capacity_bps);
      piece_end = std::max(piece_end, t);
      if (piece_end > t) pieces.emplace_back(t, piece_end);
      finish = piece_end;
      break;
    }
    pieces.emplace_back(t, gap_end);
    remaining -= gap_bits;
    t = it->second;
    ++it;
  }

  // Fold the reserved pieces into the timeline, merging adjacency so the
  // map stays compact.
  for (const auto& pc : pieces) {
    auto [ins, fresh] = dir.busy.emplace(pc.first, pc.second);
    if (!fresh) ins->second = std::max(ins->second, pc.second);
    if (ins != dir.busy.begin()) {
      auto prev = std::prev(ins);
      if (prev->second >= ins->first) {
        prev->second = std::max(prev->second, ins->second);
        dir.busy.erase(ins);
        ins = prev;
      }
    }
    auto next = std::next(ins);
    while (next != dir.busy.end() && next->first <= ins->second) {
      ins->second = std::max(ins->second, next->second);
      next = dir.busy.erase(next);
    }
  }
  return finish;
}

int64_t ShapedLink::total_bytes_written() const {
  std::lock_guard<std::mutex> lock(
      const_cast<VirtualClock&>(clock_).mutex());
  return total_written_;
}

int64_t ShapedLink::total_bytes_read() const {
  std::lock_guard<std::mutex> lock(
      const_cast<VirtualClock&>(clock_).mutex());
  return total_read_;
}

/// Endpoint over a ShapedLink. Reads from one pipe, writes to the other.
class SimStream final : public Stream {
 public:
  SimStream(ShapedLink& link, std::shared_ptr<ShapedLink::Pipe> read_pipe,
            std::shared_ptr<ShapedLink::Pipe> write_pipe, int write_dir)
      : link_(link),
        read_pipe_(std::move(read_pipe)),
        write_pipe_(std::move(write_pipe)),
        write_dir_(write_dir) {}

  ~SimStream() override { close(); }

  ptrdiff_t read_some(std::span<uint8_t> buf,
                      std::optional<int64_t> timeout_ns) override {
    auto& clock = link_.clock();
    std::unique_lock<std::mutex> lock(clock.mutex());
    int64_t deadline = VirtualClock::kNever;
    if (timeout_ns) {
      deadline = clock.now_locked() + *timeout_ns;
    }
    auto& pipe = *read_pipe_;
    for (;;) {
      int64_t now = clock.now_locked();
      size_t copied = take_deliverable(pipe, buf, now);
      if (copied > 0) {
        link_.total_read_ += static_cast<int64_t>(copied);
        clock.notify_state_change();  // wake writers blocked on backpressure
        return static_cast<ptrdiff_t>(copied);
      }
      if (pipe.writer_closed && pipe.segments.empty()) return 0;
      if (now >= deadline) return kTimedOut;
      // The wake time depends on the queue head, so any write or close
      // sends us around the loop to recompute it.
      int64_t wake = deadline;
      if (!pipe.segments.empty()) {
        wake = std::min(wake, pipe.segments.front().delivery_ns);
      }
      uint64_t seen = pipe.version;
      clock.wait_event(
          lock,
          [&] {
            return pipe.version != seen || clock.now_locked() >= wake;
          },
          wake);
    }
  }

  void write_all(std::span<const uint8_t> data) override {
    auto& clock = link_.clock();
    std::unique_lock<std::mutex> lock(clock.mutex());
    auto& pipe = *write_pipe_;
    auto& dir = link_.directions_[write_dir_];
    size_t offset = 0;
    while (offset < data.size()) {
      size_t n = std::min(kSegmentBytes, data.size() - offset);
      clock.wait_event(
          lock,
          [&] {
            return pipe.reader_closed || pipe.writer_closed ||
                   pipe.unread_bytes + static_cast<int64_t>(n) <=
                       link_.model_.buffer_bytes;
          },
          VirtualClock::kNever);
      if (pipe.reader_closed || pipe.writer_closed) {
        throw IoError("peer closed emulated stream");
      }
      ShapedLink::Segment seg;
      seg.delivery_ns =
          link_.schedule_segment(pipe, dir, clock.now_locked(), n);
      seg.data.assign(data.begin() + offset, data.begin() + offset + n);
      pipe.segments.push_back(std::move(seg));
      pipe.unread_bytes += static_cast<int64_t>(n);
      link_.total_written_ += static_cast<int64_t>(n);
      offset += n;
      ++pipe.version;
      clock.notify_state_change();
    }
  }

  void close() override {
    auto& clock = link_.clock();
    std::lock_guard<std::mutex> lock(clock.mutex());
    read_pipe_->reader_closed = true;
    write_pipe_->writer_closed = true;
    ++read_pipe_->version;
    ++write_pipe_->version;
    clock.notify_state_change();
  }

 private:
  // Copies every byte already delivered by `now`, up to buf.size().
  static size_t take_deliverable(ShapedLink::Pipe& pipe,
                                 std::span<uint8_t> buf, int64_t now) {
    size_t copied = 0;
    while (copied < buf.size() && !pipe.segments.empty()) {
      auto& seg = pipe.segments.front();
      if (seg.delivery_ns > now) break;
      size_t avail = seg.data.size() - seg.offset;
      size_t n = std::min(avail, buf.size() - copied);
      std::copy_n(seg.data.begin() + static_cast<ptrdiff_t>(seg.offset), n,
                  buf.begin() + static_cast<ptrdiff_t>(copied));
      seg.offset += n;
      copied += n;
      pipe.unread_bytes -= static_cast<int64_t>(n);
      if (seg.offset == seg.data.size()) pipe.segments.pop_front();
    }
    return copied;
  }

  ShapedLink& link_;
  std::shared_ptr<ShapedLink::Pipe> read_pipe_;
  std::shared_ptr<ShapedLink::Pipe> write_pipe_;
  int write_dir_;
};

std::pair<std::unique_ptr<Stream>, std::unique_ptr<Stream>>
ShapedLink::open_endpoints() {
  std::lock_guard<std::mutex> lock(clock_.mutex());
  auto up = std::make_shared<Pipe>();
  auto down = std::make_shared<Pipe>();
  pipes_.push_back(up);
  pipes_.push_back(down);
  auto client = std::make_unique<SimStream>(*this, down, up, kUp);
  auto server = std::make_unique<SimStream>(*this, up, down, kDown);
  return {std::move(client), std::move(server)};
}

}  // namespace nettest
