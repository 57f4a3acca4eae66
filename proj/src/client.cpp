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

#include "nettest/client.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <ctime>
#include <mutex>
#include <cstdio>
#include <thread>

#include "nettest/net.hpp"
#include "nettest/protocol.hpp"

namespace nettest {

namespace {

constexpr int64_t kPingTimeoutNs = 2 * kNanosPerSecond;
constexpr int64_t kIdleTimeoutNs = 10 * kNanosPerSecond;
constexpr uint64_t kMaxAutoChunk = 1 << 20;  // cap on pretest-derived size

/// Reusable rendezvous for the flow workers. Failed workers drop out so
/// the survivors keep meeting. On a virtual clock the wait runs under the
/// clock's own quiesce protocol, so virtual time can never advance past a
/// release before every waiter has resumed.
class PhaseBarrier {
 public:
  PhaseBarrier(int count, VirtualClock* vc) : count_(count), vc_(vc) {}

  void arrive_and_wait() {
    if (vc_ != nullptr) {
      std::unique_lock<std::mutex> lock(vc_->mutex());
      uint64_t e = epoch_;
      if (++waiting_ == count_) {
        release_locked();
        return;
      }
      vc_->wait_event(lock, [&] { return epoch_ != e; },
                      VirtualClock::kNever);
      return;
    }
    std::unique_lock<std::mutex> lock(mutex_);
    uint64_t e = epoch_;
    if (++waiting_ == count_) {
      release_locked();
      return;
    }
    cv_.wait(lock, [&] { return epoch_ != e; });
  }

  void drop() {
    if (vc_ != nullptr) {
      std::lock_guard<std::mutex> lock(vc_->mutex());
      drop_locked();
      return;
    }
    std::lock_guard<std::mutex> lock(mutex_);
    drop_locked();
  }

 private:
  void release_locked() {
    waiting_ = 0;
    ++epoch_;
    if (vc_ != nullptr) {
      vc_->notify_state_change();
    } else {
      cv_.notify_all();
    }
  }

  void drop_locked() {
    --count_;
    if (count_ > 0 && waiting_ == count_) release_locked();
  }

  int count_;
  VirtualClock* vc_;
  std::mutex mutex_;
  std::condition_variable cv_;
  int waiting_ = 0;
  uint64_t epoch_ = 0;
};

void exchange_greeting(Stream& stream) {
  write_line(stream, serialize_message(ControlMessage::greeting()));
  ControlMessage reply = parse_message(read_line(stream, kIdleTimeoutNs));
  if (reply.kind != MessageKind::Greeting ||
      reply.version != kProtocolVersion) {
    throw ProtocolError("unexpected greeting reply");
  }
}

void expect_ok(Stream& stream) {
  ControlMessage reply = parse_message(read_line(stream, kIdleTimeoutNs));
  if (reply.kind == MessageKind::Err) {
    throw ProtocolError("server error " + std::to_string(reply.args[0]));
  }
  if (reply.kind != MessageKind::Ok) {
    throw ProtocolError("expected OK");
  }
}

void record_sample(FlowSeries& series, int64_t t_ns, int64_t cumulative) {
  // Series timestamps are strictly increasing even if two chunks land in
  // the same clock tick.
  int64_t prev = series.samples.empty() ? 0 : series.samples.back().t_ns;
  series.samples.push_back({std::max(t_ns, prev + 1), cumulative});
}

void run_dl_phase(Stream& stream, Clock& clock, uint64_t duration_ns,
                  uint64_t chunk_size, FlowSeries& series) {
  write_line(stream, serialize_message(
                         ControlMessage::get_time(duration_ns, chunk_size)));
  std::vector<uint8_t> chunk(chunk_size);
  int64_t t0 = clock.now_ns();
  int64_t cumulative = 0;
  for (;;) {
    read_exact(stream, chunk, kIdleTimeoutNs);
    cumulative += static_cast<int64_t>(chunk_size);
    record_sample(series, clock.now_ns() - t0, cumulative);
    uint8_t term = chunk[chunk_size - 1];
    if (term == kChunkFinal) return;
    if (term != kChunkMore) throw ProtocolError("bad chunk terminator");
  }
}

// Pulls whatever receipt bytes are already available (timeout 0) or waits
// up to `timeout_ns`, appending complete TIME lines to `series`.
// Returns false on timeout with no data.
bool drain_receipts(Stream& stream, std::string& pending, FlowSeries& series,
                    std::optional<int64_t> timeout_ns) {
  uint8_t buf[4096];
  ptrdiff_t n = stream.read_some(buf, timeout_ns);
  if (n == 0) throw IoError("connection closed during uplink");
  if (n == Stream::kTimedOut) return false;
  pending.append(reinterpret_cast<char*>(buf), static_cast<size_t>(n));
  size_t nl;
  while ((nl = pending.find('\n')) != std::string::npos) {
    ControlMessage msg = parse_message(pending.substr(0, nl + 1));
    pending.erase(0, nl + 1);
    if (msg.kind != MessageKind::TimeReport || msg.args.size() != 2) {
      throw ProtocolError("expected TIME receipt during uplink");
    }
    record_sample(series, static_cast<int64_t>(msg.args[0]),
                  static_cast<int64_t>(msg.args[1]));
  }
  return true;
}

void run_ul_phase(Stream& stream, Clock& clock, uint64_t duration_ns,
                  uint64_t chunk_size, uint64_t seed, FlowSeries& series) {
  write_line(stream,
             serialize_message(ControlMessage::put(duration_ns, chunk_size)));
  expect_ok(stream);
  std::vector<uint8_t> chunk(chunk_size);
  std::string pending;
  int64_t t0 = clock.now_ns();
  uint64_t chunks_sent = 0;
  while (clock.now_ns() - t0 < static_cast<int64_t>(duration_ns)) {
    fill_chunk(chunk, chunk_size, false, seed + chunks_sent);
    stream.write_all(chunk);
    ++chunks_sent;
    while (drain_receipts(stream, pending, series, 0)) {
    }
  }
  fill_chunk(chunk, chunk_size, true, seed + chunks_sent);
  stream.write_all(chunk);
  ++chunks_sent;
  while (series.samples.size() < chunks_sent) {
    if (!drain_receipts(stream, pending, series, kIdleTimeoutNs)) {
      throw IoError("timed out waiting for uplink receipts");
    }
  }
}

}  // namespace

void MeasurementConfig::validate() const {
  if (flows_dl < 1 || flows_ul < 1) throw ConfigError("flow counts must be >= 1");
  if (duration_dl_s <= 0 || duration_ul_s <= 0 || duration_pretest_s <= 0) {
    throw ConfigError("durations must be positive");
  }
  if (ping_count < 1) throw ConfigError("ping count must be >= 1");
  if (chunk_size != 0 && chunk_size < kMinChunkSize) {
    throw ConfigError("chunk size must be 0 (auto) or >= 64");
  }
  if (stats_interval_ns < kNanosPerMilli) {
    throw ConfigError("stats interval must be >= 1 ms");
  }
  if (server_port == 0) throw ConfigError("port must be in [1, 65535]");
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Complete:
      return "complete";
    case RunStatus::PartialFailure:
      return "partial_failure";
    case RunStatus::Aborted:
      return "aborted";
  }
  return "aborted";
}

RunStatus run_status_from_string(const std::string& s) {
  if (s == "complete") return RunStatus::Complete;
  if (s == "partial_failure") return RunStatus::PartialFailure;
  if (s == "aborted") return RunStatus::Aborted;
  throw SchemaError("unknown run status: " + s);
}

int64_t median_lower(std::vector<int64_t> values) {
  if (values.empty()) throw ConfigError("median of empty set");
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

std::string utc_timestamp_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

uint64_t run_pretest_dl(Stream& stream, Clock& clock, int64_t duration_ns,
                        FlowSeries* series) {
  int64_t t0 = clock.now_ns();
  uint64_t size = kMinChunkSize;
  uint64_t last_completed = 0;
  int64_t cumulative = 0;
  std::vector<uint8_t> buf;
  do {
    write_line(stream, serialize_message(ControlMessage::get_chunk(size)));
    buf.resize(size);
    read_exact(stream, buf, kIdleTimeoutNs);
    if (buf[size - 1] != kChunkFinal) {
      throw ProtocolError("pretest chunk missing final terminator");
    }
    cumulative += static_cast<int64_t>(size);
    if (series != nullptr) {
      record_sample(*series, clock.now_ns() - t0, cumulative);
    }
    last_completed = size;
    size *= 2;  // chunk sizes double each iteration
  } while (clock.now_ns() - t0 < duration_ns);
  return last_completed;
}

uint64_t run_pretest_ul(Stream& stream, Clock& clock, int64_t duration_ns,
                        uint64_t seed, FlowSeries* series) {
  int64_t t0 = clock.now_ns();
  uint64_t size = kMinChunkSize;
  uint64_t last_completed = 0;
  int64_t cumulative = 0;
  std::vector<uint8_t> buf;
  do {
    write_line(stream,
               serialize_message(ControlMessage::put_no_result(size)));
    expect_ok(stream);
    buf.resize(size);
    fill_chunk(buf, size, true, seed + size);
    stream.write_all(buf);
    expect_ok(stream);
    cumulative += static_cast<int64_t>(size);
    if (series != nullptr) {
      record_sample(*series, clock.now_ns() - t0, cumulative);
    }
    last_completed = size;
    size *= 2;
  } while (clock.now_ns() - t0 < duration_ns);
  return last_completed;
}

PingResult run_ping(Stream& stream, Clock& clock, int count) {
  if (count < 1) throw ConfigError("ping count must be >= 1");
  PingResult result;
  int stale_pongs = 0;
  for (int i = 0; i < count; ++i) {
    int64_t t_send = clock.now_ns();
    write_line(stream, serialize_message(ControlMessage::ping()));
    bool matched = false;
    while (!matched) {
      std::string line;
      try {
        line = read_line(stream, kPingTimeoutNs);
      } catch (const IoError&) {
        ++result.lost;
        ++stale_pongs;  // the reply may still arrive; ignore it later
        break;
      }
      ControlMessage msg = parse_message(line);
      if (msg.kind != MessageKind::Pong) {
        throw ProtocolError("expected PONG");
      }
      if (stale_pongs > 0) {
        --stale_pongs;
        continue;
      }
      result.rtts_ns.push_back(clock.now_ns() - t_send);
      matched = true;
    }
  }
  if (2 * result.lost > count) {
    throw IoError("ping phase failed: over half the pings were lost");
  }
  result.median_ns = median_lower(result.rtts_ns);
  return result;
}

namespace {

struct FlowCtx {
  std::unique_ptr<Stream> stream;
  FlowSeries pretest_dl;
  FlowSeries dl;
  FlowSeries pretest_ul;
  FlowSeries ul;
  uint64_t pretest_size = 0;
  bool failed = false;
  std::string error;
  std::vector<SocketStatsSample> stats;
};

// Runs a StatsSampler on its own thread for the duration of `body`.
// No-op when the stream has no OS socket behind it.
template <typename Body>
void with_sampler(FlowCtx& ctx, int flow_id, const char* stage,
                  int64_t interval_ns, Clock& clock, Body&& body) {
  auto fd = ctx.stream->native_handle();
  if (!fd) {
    body();
    return;
  }
  auto* vc = dynamic_cast<VirtualClock*>(&clock);
  StatsSampler sampler(*fd, flow_id, stage, interval_ns, clock);
  // Register the sampler's clock participation before its thread runs so
  // virtual time cannot advance past its first sampling point.
  std::unique_ptr<VirtualClock::Participant> participant;
  if (vc != nullptr) {
    participant = std::make_unique<VirtualClock::Participant>(*vc);
  }
  std::thread t([&, p = std::move(participant)] { sampler.run(); });
  try {
    body();
  } catch (...) {
    sampler.stop();
    t.join();
    throw;
  }
  sampler.stop();
  t.join();
  auto samples = sampler.take_samples();
  ctx.stats.insert(ctx.stats.end(), samples.begin(), samples.end());
}

}  // namespace

RunRecord run_measurement(const MeasurementConfig& config,
                          const Connector& connector, Clock& clock) {
  config.validate();
  RunRecord rec;
  rec.config = config;
  rec.start_wallclock_utc = utc_timestamp_now();
  auto* vc = dynamic_cast<VirtualClock*>(&clock);

  int n = std::max(config.flows_dl, config.flows_ul);
  std::vector<FlowCtx> flows(n);
  try {
    for (auto& f : flows) {
      f.stream = connector();
      exchange_greeting(*f.stream);
    }
    if (auto* tcp = dynamic_cast<TcpStream*>(flows[0].stream.get())) {
      rec.server_address = tcp->peer_address();
    }
  } catch (const Error&) {
    rec.status = RunStatus::Aborted;
    rec.end_wallclock_utc = utc_timestamp_now();
    return rec;
  }

  PhaseBarrier barrier(n, vc);
  std::atomic<uint64_t> shared_chunk{0};
  bool ping_failed = false;

  // Each worker's clock participation is registered here, before its thread
  // starts, so virtual time cannot run ahead while threads are still being
  // spawned.
  auto worker = [&](int f, std::unique_ptr<VirtualClock::Participant>) {
    FlowCtx& ctx = flows[f];
    auto* dbg = getenv("NETTEST_DEBUG_PHASES");
    auto ph = [&](const char* name) {
      if (dbg) fprintf(stderr, "[flow %d] %s at %.3f s\n", f + 1, name, clock.now_ns()/1e9);
    };
    try {
      // Phase 1: pre-test DL.
      barrier.arrive_and_wait();
      ph("pretest_dl");
      if (f < config.flows_dl) {
        ctx.pretest_size = run_pretest_dl(
            *ctx.stream, clock, config.duration_pretest_ns(), &ctx.pretest_dl);
      }
      barrier.arrive_and_wait();

      // Phase 2: ping, on the first flow only. It also settles the chunk
      // size for the timed phases (largest pre-test result, unless the
      // config pins one).
      ph("ping");
      if (f == 0) {
        uint64_t chunk = config.chunk_size;
        if (chunk == 0) {
          for (const auto& other : flows) {
            chunk = std::max(chunk, other.pretest_size);
          }
          chunk = std::clamp<uint64_t>(chunk, kMinChunkSize, kMaxAutoChunk);
        }
        shared_chunk.store(chunk);
        try {
          rec.ping = run_ping(*ctx.stream, clock, config.ping_count);
        } catch (const Error& e) {
          ping_failed = true;
          rec.ping = PingResult{};
          (void)e;
        }
      }
      barrier.arrive_and_wait();

      ph("dl");
      // Phase 3: DL.
      if (f < config.flows_dl) {
        with_sampler(ctx, f + 1, "dl", config.stats_interval_ns, clock, [&] {
          run_dl_phase(*ctx.stream, clock, config.duration_dl_ns(),
                       shared_chunk.load(), ctx.dl);
        });
      }
      barrier.arrive_and_wait();

      ph("pretest_ul");
      // Phase 4: pre-test UL.
      if (f < config.flows_ul) {
        run_pretest_ul(*ctx.stream, clock, config.duration_pretest_ns(),
                       config.run_id.size() + f + 1, &ctx.pretest_ul);
      }
      barrier.arrive_and_wait();

      ph("ul");
      // Phase 5: UL.
      if (f < config.flows_ul) {
        with_sampler(ctx, f + 1, "ul", config.stats_interval_ns, clock, [&] {
          run_ul_phase(*ctx.stream, clock, config.duration_ul_ns(),
                       shared_chunk.load(), 7700 + f, ctx.ul);
        });
      }
      ph("quit");
      write_line(*ctx.stream, serialize_message(ControlMessage::quit()));
      ctx.stream->close();
    } catch (const std::exception& e) {
      ctx.failed = true;
      ctx.error = e.what();
      std::fprintf(stderr, "[client] flow %d failed: %s\n", f + 1, e.what());
      barrier.drop();
      ctx.stream->close();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(n);
  for (int f = 0; f < n; ++f) {
    std::unique_ptr<VirtualClock::Participant> participant;
    if (vc != nullptr) {
      participant = std::make_unique<VirtualClock::Participant>(*vc);
    }
    threads.emplace_back(worker, f, std::move(participant));
  }
  {
    std::optional<VirtualClock::DetachGuard> guard;
    if (vc != nullptr) guard.emplace(*vc);
    for (auto& t : threads) t.join();
  }

  bool any_failed = ping_failed;
  for (int f = 0; f < n; ++f) {
    FlowCtx& ctx = flows[f];
    auto finish = [&](FlowSeries& s, std::vector<FlowSeries>& out) {
      s.flow_id = f + 1;
      s.failed = ctx.failed;
      out.push_back(std::move(s));
    };
    if (f < config.flows_dl) {
      finish(ctx.pretest_dl, rec.pretest_dl_series);
      finish(ctx.dl, rec.dl_series);
    }
    if (f < config.flows_ul) {
      finish(ctx.pretest_ul, rec.pretest_ul_series);
      finish(ctx.ul, rec.ul_series);
    }
    rec.pretest_final_chunk_size =
        std::max(rec.pretest_final_chunk_size, ctx.pretest_size);
    for (auto& s : ctx.stats) rec.stats.push_back(std::move(s));
    if (ctx.failed) any_failed = true;
  }
  rec.chunk_size_used = shared_chunk.load();
  rec.status = any_failed ? RunStatus::PartialFailure : RunStatus::Complete;
  rec.end_wallclock_utc = utc_timestamp_now();
  return rec;
}

RunRecord run_measurement(const MeasurementConfig& config) {
  RealClock clock;
  Connector connector = [&config] {
    return TcpStream::connect(config.server_host, config.server_port);
  };
  return run_measurement(config, connector, clock);
}

int64_t RunRecord::total_downloaded_bytes() const {
  int64_t total = 0;
  for (const auto* group : {&pretest_dl_series, &dl_series}) {
    for (const auto& s : *group) {
      if (!s.samples.empty()) total += s.samples.back().bytes;
    }
  }
  return total;
}

int64_t RunRecord::total_uploaded_bytes() const {
  int64_t total = 0;
  for (const auto* group : {&pretest_ul_series, &ul_series}) {
    for (const auto& s : *group) {
      if (!s.samples.empty()) total += s.samples.back().bytes;
    }
  }
  return total;
}

}  // namespace nettest
