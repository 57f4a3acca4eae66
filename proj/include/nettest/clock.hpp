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

#ifndef NETTEST_CLOCK_HPP
#define NETTEST_CLOCK_HPP

#include <condition_variable>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>

#include "nettest/error.hpp"

namespace nettest {

constexpr int64_t kNanosPerSecond = 1'000'000'000;
constexpr int64_t kNanosPerMilli = 1'000'000;

/// Time source used by the measurement machinery. Timed phases, samplers
/// and the batch pacer all go through this interface so they can run
/// against either the OS monotonic clock or a virtual clock driven by the
/// link emulator.
class Clock {
 public:
  virtual ~Clock() = default;

  virtual int64_t now_ns() = 0;
  virtual void sleep_until(int64_t deadline_ns) = 0;

  void sleep_for(int64_t duration_ns) { sleep_until(now_ns() + duration_ns); }
};

/// std::chrono::steady_clock, zeroed at construction.
class RealClock final : public Clock {
 public:
  RealClock();
  int64_t now_ns() override;
  void sleep_until(int64_t deadline_ns) override;

 private:
  int64_t epoch_ns_;
};

/// Discrete-event virtual clock shared by a set of worker threads.
///
/// Every thread that can block on virtual time registers as a participant.
/// Time advances only when no participant is runnable: it jumps to the
/// earliest pending deadline. Threads that block on something other than
/// virtual time (thread join, a phase barrier) must wrap the blocking call
/// in a DetachGuard so the clock does not wait for them.
class VirtualClock final : public Clock {
 public:
  static constexpr int64_t kNever = std::numeric_limits<int64_t>::max();

  int64_t now_ns() override;
  void sleep_until(int64_t deadline_ns) override;

  /// Blocks until pred() holds or virtual time reaches deadline_ns.
  /// Returns pred() at wakeup. pred is evaluated under the clock mutex;
  /// all emulator state shares this mutex, so writers publish state and
  /// call notify_state_change() while holding lock().
  template <typename Pred>
  bool wait_event(std::unique_lock<std::mutex>& lock, Pred&& pred,
                  int64_t deadline_ns) {
    while (!pred()) {
      if (now_unlocked() >= deadline_ns) return pred();
      block(lock, deadline_ns);
    }
    return true;
  }

  std::mutex& mutex() { return mutex_; }

  /// Publishes a state change; caller must hold mutex(). Time will not
  /// advance until every parked participant has re-evaluated its wait
  /// condition, so no event can be observed later than it happened.
  void notify_state_change() {
    ++wake_epoch_;
    cv_.notify_all();
  }

  /// Current time; caller must hold mutex().
  int64_t now_locked() const { return now_; }

  class Participant {
   public:
    explicit Participant(VirtualClock& clock);
    ~Participant();
    Participant(const Participant&) = delete;
    Participant& operator=(const Participant&) = delete;

   private:
    VirtualClock& clock_;
  };

  /// Marks the calling participant as not runnable while it blocks outside
  /// the clock (barriers, joins).
  class DetachGuard {
   public:
    explicit DetachGuard(VirtualClock& clock);
    ~DetachGuard();
    DetachGuard(const DetachGuard&) = delete;
    DetachGuard& operator=(const DetachGuard&) = delete;

   private:
    VirtualClock& clock_;
  };

 private:
  friend class Participant;
  friend class DetachGuard;

  int64_t now_unlocked() const { return now_; }

  // Parks the caller with the given wake deadline; advances time if this
  // was the last runnable participant. Caller holds `lock`.
  void block(std::unique_lock<std::mutex>& lock, int64_t deadline_ns);
  void maybe_advance_locked();

  std::mutex mutex_;
  std::condition_variable cv_;
  int64_t now_ = 0;
  int runnable_ = 0;
  int registered_ = 0;
  int detached_ = 0;
  bool poisoned_ = false;
  uint64_t wake_epoch_ = 0;
  // Deadline of each parked participant, with the wake epoch it parked
  // under. A parked entry from an older epoch has not yet reacted to the
  // latest event, so the clock must not advance over it.
  std::multimap<int64_t, uint64_t> deadlines_;
};

}  // namespace nettest

#endif  // NETTEST_CLOCK_HPP
