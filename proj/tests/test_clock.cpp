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

#include <doctest.h>

#include <atomic>
#include <latch>
#include <thread>
#include <vector>

#include "nettest/clock.hpp"
#include "nettest/error.hpp"

using namespace nettest;

TEST_CASE("real clock is monotonic and starts near zero") {
  RealClock clock;
  int64_t a = clock.now_ns();
  int64_t b = clock.now_ns();
  CHECK(a >= 0);
  CHECK(b >= a);
  CHECK(a < kNanosPerSecond);  // zeroed at construction
}

TEST_CASE("virtual clock jumps a lone sleeper straight to its deadline") {
  VirtualClock clock;
  std::thread t([&] {
    VirtualClock::Participant participant(clock);
    clock.sleep_until(5 * kNanosPerMilli);
    clock.sleep_for(2 * kNanosPerMilli);
  });
  t.join();
  CHECK(clock.now_ns() == 7 * kNanosPerMilli);
}

TEST_CASE("virtual time advances to the earliest deadline across threads") {
  VirtualClock clock;
  std::vector<int64_t> wake_order;
  std::mutex order_mutex;
  // All three must register before any of them parks, otherwise the lone
  // early sleeper gets jumped straight to its deadline.
  std::latch ready(3);
  auto sleeper = [&](int64_t deadline) {
    VirtualClock::Participant participant(clock);
    ready.arrive_and_wait();
    clock.sleep_until(deadline);
    std::lock_guard<std::mutex> lock(order_mutex);
    wake_order.push_back(deadline);
  };
  std::thread a(sleeper, 30 * kNanosPerMilli);
  std::thread b(sleeper, 10 * kNanosPerMilli);
  std::thread c(sleeper, 20 * kNanosPerMilli);
  a.join();
  b.join();
  c.join();
  CHECK(clock.now_ns() == 30 * kNanosPerMilli);
  REQUIRE(wake_order.size() == 3);
  CHECK(wake_order[0] == 10 * kNanosPerMilli);
  CHECK(wake_order[1] == 20 * kNanosPerMilli);
  CHECK(wake_order[2] == 30 * kNanosPerMilli);
}

TEST_CASE("wait_event wakes on a published state change at the same instant") {
  VirtualClock clock;
  std::atomic<bool> flag{false};
  int64_t observed_ns = -1;
  std::latch ready(2);

  std::thread waiter([&] {
    VirtualClock::Participant participant(clock);
    ready.arrive_and_wait();
    std::unique_lock<std::mutex> lock(clock.mutex());
    bool ok = clock.wait_event(lock, [&] { return flag.load(); },
                               kNanosPerSecond);
    CHECK(ok);
    observed_ns = clock.now_locked();
  });
  std::thread setter([&] {
    VirtualClock::Participant participant(clock);
    ready.arrive_and_wait();
    clock.sleep_until(3 * kNanosPerMilli);
    std::unique_lock<std::mutex> lock(clock.mutex());
    flag.store(true);
    clock.notify_state_change();
  });
  waiter.join();
  setter.join();
  // The waiter saw the event at the virtual instant it was produced, not
  // at its own timeout.
  CHECK(observed_ns == 3 * kNanosPerMilli);
}

TEST_CASE("wait_event returns false once the deadline passes") {
  VirtualClock clock;
  std::thread t([&] {
    VirtualClock::Participant participant(clock);
    std::unique_lock<std::mutex> lock(clock.mutex());
    bool ok = clock.wait_event(lock, [] { return false; },
                               4 * kNanosPerMilli);
    CHECK_FALSE(ok);
    CHECK(clock.now_locked() == 4 * kNanosPerMilli);
  });
  t.join();
}

TEST_CASE("an unfulfillable untimed wait poisons the clock") {
  VirtualClock clock;
  std::thread t([&] {
    VirtualClock::Participant participant(clock);
    std::unique_lock<std::mutex> lock(clock.mutex());
    CHECK_THROWS_AS(
        clock.wait_event(lock, [] { return false; }, VirtualClock::kNever),
        Error);
  });
  t.join();
}

TEST_CASE("a detached participant keeps an untimed wait alive") {
  VirtualClock clock;
  std::atomic<bool> flag{false};
  std::latch ready(2);

  std::thread waiter([&] {
    VirtualClock::Participant participant(clock);
    ready.arrive_and_wait();
    std::unique_lock<std::mutex> lock(clock.mutex());
    CHECK(clock.wait_event(lock, [&] { return flag.load(); },
                           VirtualClock::kNever));
  });
  std::thread detached([&] {
    VirtualClock::Participant participant(clock);
    ready.arrive_and_wait();
    {
      // Simulates blocking on something outside virtual time.
      VirtualClock::DetachGuard guard(clock);
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    std::unique_lock<std::mutex> lock(clock.mutex());
    flag.store(true);
    clock.notify_state_change();
  });
  waiter.join();
  detached.join();
  CHECK(clock.now_ns() == 0);  // nothing ever needed virtual time
}

TEST_CASE("interleaved sleepers advance deterministically") {
  // Two threads alternating fixed sleeps always interleave the same way,
  // regardless of OS scheduling.
  for (int trial = 0; trial < 20; ++trial) {
    VirtualClock clock;
    std::vector<int> order;
    std::mutex order_mutex;
    std::latch ready(2);
    auto runner = [&](int id, int64_t step_ns) {
      VirtualClock::Participant participant(clock);
      ready.arrive_and_wait();
      for (int i = 1; i <= 3; ++i) {
        clock.sleep_until(i * step_ns);
        std::lock_guard<std::mutex> lock(order_mutex);
        order.push_back(id);
      }
    };
    std::thread a(runner, 1, 10 * kNanosPerMilli);
    std::thread b(runner, 2, 17 * kNanosPerMilli);
    a.join();
    b.join();
    // Wakeups at 10, 17, 20, 30, 34, 51.
    CHECK(order == std::vector<int>{1, 2, 1, 1, 2, 2});
    CHECK(clock.now_ns() == 51 * kNanosPerMilli);
  }
}
