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

#include "nettest/clock.hpp"

#include <chrono>
#include <thread>

namespace nettest {

namespace {
int64_t steady_now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}
}  // namespace

RealClock::RealClock() : epoch_ns_(steady_now_ns()) {}

int64_t RealClock::now_ns() { return steady_now_ns() - epoch_ns_; }

void RealClock::sleep_until(int64_t deadline_ns) {
  int64_t remaining = deadline_ns - now_ns();
  if (remaining > 0) {
    std::this_thread::sleep_for(std::chrono::nanoseconds(remaining));
  }
}

int64_t VirtualClock::now_ns() {
  std::lock_guard<std::mutex> lock(mutex_);
  return now_;
}

void VirtualClock::sleep_until(int64_t deadline_ns) {
  std::unique_lock<std::mutex> lock(mutex_);
  while (now_ < deadline_ns) {
    block(lock, deadline_ns);
  }
}

void VirtualClock::block(std::unique_lock<std::mutex>& lock,
                         int64_t deadline_ns) {
  auto it = deadlines_.emplace(deadline_ns, wake_epoch_);
  --runnable_;
  maybe_advance_locked();
  // Return (without waiting, if need be) as soon as the deadline passes or
  // any event fires after we parked; the caller re-evaluates its condition
  // and parks again under the new epoch.
  while (!poisoned_ && now_ < deadline_ns && it->second == wake_epoch_) {
    cv_.wait(lock);
  }
  ++runnable_;
  deadlines_.erase(it);
  if (poisoned_) {
    throw Error("virtual clock deadlock: all participants blocked forever");
  }
}

void VirtualClock::maybe_advance_locked() {
  if (runnable_ > 0 || deadlines_.empty()) return;
  for (const auto& [deadline, epoch] : deadlines_) {
    // A participant parked before the latest event may be about to wake
    // and act at the current time; advancing now would reorder events.
    if (epoch != wake_epoch_) return;
  }
  int64_t next = deadlines_.begin()->first;
  if (next == kNever) {
    // Every attached participant waits on an event with no timeout. A
    // detached thread (barrier, join) may still reattach and produce it;
    // with none left this is a genuine deadlock.
    if (detached_ == 0) {
      poisoned_ = true;
      cv_.notify_all();
    }
    return;
  }
  now_ = next;
  ++wake_epoch_;
  cv_.notify_all();
}

VirtualClock::Participant::Participant(VirtualClock& clock) : clock_(clock) {
  std::lock_guard<std::mutex> lock(clock_.mutex_);
  ++clock_.registered_;
  ++clock_.runnable_;
}

VirtualClock::Participant::~Participant() {
  std::lock_guard<std::mutex> lock(clock_.mutex_);
  --clock_.registered_;
  --clock_.runnable_;
  clock_.maybe_advance_locked();
}

VirtualClock::DetachGuard::DetachGuard(VirtualClock& clock) : clock_(clock) {
  std::lock_guard<std::mutex> lock(clock_.mutex_);
  --clock_.runnable_;
  ++clock_.detached_;
  clock_.maybe_advance_locked();
}

VirtualClock::DetachGuard::~DetachGuard() {
  std::lock_guard<std::mutex> lock(clock_.mutex_);
  ++clock_.runnable_;
  --clock_.detached_;
}

}  // namespace nettest
