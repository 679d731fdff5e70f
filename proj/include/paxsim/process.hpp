// Copyright 2026 The paxsim Authors
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

#pragma once

#include <compare>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "paxsim/history.hpp"
#include "paxsim/message.hpp"
#include "paxsim/types.hpp"

namespace paxsim {

using Tick = std::int64_t;

enum class TimerKind : std::uint8_t {
  client_send,
  client_retry,
  replica_repropose,
  leader_phase1,
  leader_resend_2a,
  leader_progress,
  leader_ping,
};

std::string_view timer_kind_name(TimerKind k);

/// Identifies a timer within its owner. Arguments are kind-specific
/// (slot, ballot round, command id).
struct TimerTag {
  TimerKind kind = TimerKind::client_send;
  std::int64_t a = 0;
  std::int64_t b = 0;

  friend auto operator<=>(const TimerTag&, const TimerTag&) = default;
};

std::string to_string(const TimerTag& t);

struct Outgoing {
  Message message;
  std::vector<ProcessId> dests;
};

/// Arm (after > 0) or cancel (after == 0) a timer. Arming an armed tag
/// replaces it. Applied in order.
struct TimerOp {
  TimerTag tag;
  Tick after = 0;
  bool is_cancel() const { return after == 0; }
};

/// A learner's chosen value.
struct ChosenOutput {
  Value value = 0;
  friend bool operator==(const ChosenOutput&, const ChosenOutput&) = default;
};

/// A replica applying a decided command to its application state.
struct AppliedOutput {
  Slot slot = kFirstSlot;
  Command command;
  std::string result;
  friend bool operator==(const AppliedOutput&, const AppliedOutput&) = default;
};

using Output = std::variant<ChosenOutput, AppliedOutput>;

/// Everything a transition asks of its environment. Sends are already recorded
/// in the sender's history when they appear here.
struct Effects {
  std::vector<Outgoing> sends;
  std::vector<TimerOp> timers;
  std::vector<Output> outputs;

  void arm(const TimerTag& tag, Tick after);
  void cancel(const TimerTag& tag) { timers.push_back({tag, 0}); }
  void merge(Effects&& other);
  bool empty() const { return sends.empty() && timers.empty() && outputs.empty(); }
};

/// Seeded source for every nondeterministic choice a process makes.
class Chooser {
 public:
  explicit Chooser(std::uint64_t seed) : rng_(seed) {}
  /// Uniform index in [0, n). n must be positive.
  std::size_t pick(std::size_t n);
  /// Uniform integer in [lo, hi].
  std::int64_t uniform(std::int64_t lo, std::int64_t hi);
  double unit();

 private:
  std::mt19937_64 rng_;
};

struct StepContext {
  Tick now = 0;
  Chooser& chooser;
};

/// Common base of every protocol state machine. The environment delivers a
/// message through deliver(), which appends it to `received` and runs the
/// receive handlers; then calls step() until it returns false, each call
/// firing one enabled await branch.
class Process {
 public:
  explicit Process(ProcessId self) : self_(self) {}
  virtual ~Process() = default;
  Process(const Process&) = delete;
  Process& operator=(const Process&) = delete;

  ProcessId id() const { return self_; }
  const MessageHistory& history() const { return history_; }

  virtual Effects start(StepContext& ctx);
  Effects deliver(const Message& m, ProcessId from, StepContext& ctx);
  virtual Effects on_timer(const TimerTag& tag, StepContext& ctx);
  /// Fires one enabled guard, if any, appending its effects.
  virtual bool step(StepContext& ctx, Effects& out) = 0;

  /// Steps until no guard is enabled. Throws SafetyViolation past max_firings.
  Effects settle(StepContext& ctx, int max_firings = 100000);

 protected:
  virtual void on_receive(const Message& m, ProcessId from, StepContext& ctx, Effects& out);

  void send(Effects& out, const Message& m, const ProcessSet& dests);
  void send(Effects& out, const Message& m, ProcessId dest);

  ProcessId self_;
  MessageHistory history_;
};

}  // namespace paxsim
