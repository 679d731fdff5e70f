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

// Multi-Paxos with preemption and reconfiguration: replicas propose client
// commands into slots and apply decisions in slot order, leaders run the two
// phases under a (round, leader) ballot, acceptors vote and report preemption.
// Every decision a role makes is a query over its own message history.

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "paxsim/process.hpp"
#include "paxsim/variants.hpp"

namespace paxsim {

using AppState = std::map<std::string, std::string>;

/// Deterministic application: (operation, state) -> (state, result).
using ApplyFn = std::function<std::pair<AppState, std::string>(const Operation&, AppState)>;

/// Key-value store understanding "put k v", "get k" and "append k v".
/// Results echo the value after the operation; unknown verbs yield "error".
ApplyFn kv_apply();

class Replica final : public Process {
 public:
  Replica(ProcessId self, ProcessSet leaders, VariantConfig cfg, ApplyFn apply = kv_apply());

  bool step(StepContext& ctx, Effects& out) override;
  Effects on_timer(const TimerTag& tag, StepContext& ctx) override;

  /// Propose branch. Returns false when its guard does not hold.
  bool try_propose(StepContext& ctx, Effects& out);
  /// Apply branch. Returns false when slot_out is not decided.
  bool try_apply(StepContext& ctx, Effects& out);

  Slot slot_in() const { return slot_in_; }
  Slot slot_out() const { return slot_out_; }
  const ProcessSet& leaders() const { return leaders_; }
  const AppState& state() const { return state_; }
  const std::vector<AppliedOutput>& applied() const { return applied_; }
  /// Slots at which two different decisions were observed.
  const std::vector<Slot>& conflicts() const { return conflicts_; }

 protected:
  void on_receive(const Message& m, ProcessId from, StepContext& ctx, Effects& out) override;

 private:
  bool propose_enabled() const;

  ProcessSet leaders_;
  VariantConfig cfg_;
  ApplyFn apply_;
  AppState state_;
  Slot slot_in_ = kFirstSlot;
  Slot slot_out_ = kFirstSlot;
  std::vector<AppliedOutput> applied_;
  std::vector<Slot> conflicts_;
};

class Leader final : public Process {
 public:
  enum class Phase { idle, phase1, phase2, monitoring };

  Leader(ProcessId self, ProcessSet acceptors, ProcessSet replicas, VariantConfig cfg);

  /// Ballot (0, self) and the first phase 1.
  Effects start(StepContext& ctx) override;
  bool step(StepContext& ctx, Effects& out) override;
  Effects on_timer(const TimerTag& tag, StepContext& ctx) override;

  const Ballot& ballot() const { return ballot_; }
  Phase phase() const { return phase_; }
  const std::optional<MonitorState>& monitor() const { return monitor_; }
  /// Number of phase 1 entries so far, the initial one included.
  std::int64_t rounds_attempted() const { return rounds_attempted_; }

 protected:
  void on_receive(const Message& m, ProcessId from, StepContext& ctx, Effects& out) override;

 private:
  void enter_phase1(StepContext& ctx, Effects& out);
  void leave_ballot(Effects& out);
  void send_2a(Slot s, const Command& c, Effects& out);
  void refresh_progress_timer(Effects& out);
  void preempted(const Ballot& by, StepContext& ctx, Effects& out);
  void monitor_tick(StepContext& ctx, Effects& out);

  bool phase1_step(StepContext& ctx, Effects& out);
  bool phase2_step(StepContext& ctx, Effects& out);
  bool monitoring_step(StepContext& ctx, Effects& out);

  ProcessSet acceptors_;
  ProcessSet replicas_;
  VariantConfig cfg_;
  std::size_t quorum_;
  Ballot ballot_;
  Phase phase_ = Phase::idle;
  std::optional<MonitorState> monitor_;
  bool progress_armed_ = false;
  std::int64_t rounds_attempted_ = 0;
};

class MultiAcceptor final : public Process {
 public:
  MultiAcceptor(ProcessId self, VariantConfig cfg);

  bool step(StepContext&, Effects&) override { return false; }

 protected:
  void on_receive(const Message& m, ProcessId from, StepContext& ctx, Effects& out) override;

 private:
  void on_1a(const M1a& m, ProcessId from, Effects& out);
  void on_2a(const M2a& m, ProcessId from, Effects& out);
  void on_any(const Ballot& b, ProcessId from, Effects& out);

  VariantConfig cfg_;
};

struct ClientConfig {
  /// Ticks between successive first sends; 0 sends every request at start.
  Tick interval = 0;
  /// Resend an unanswered request after this many ticks; 0 disables retries.
  Tick retry_after = 0;
  int max_retries = 0;
};

/// Issues each command to all replicas and waits for a response from any one.
class Client final : public Process {
 public:
  Client(ProcessId self, ProcessSet replicas, std::vector<Operation> ops, ClientConfig cfg = {});

  Effects start(StepContext& ctx) override;
  bool step(StepContext&, Effects&) override { return false; }
  Effects on_timer(const TimerTag& tag, StepContext& ctx) override;

  const std::vector<Command>& commands() const { return commands_; }
  bool answered(std::int64_t cmd_id) const;
  std::vector<Command> pending() const;

 protected:
  void on_receive(const Message& m, ProcessId from, StepContext& ctx, Effects& out) override;

 private:
  void issue(std::size_t i, Effects& out);

  ProcessSet replicas_;
  std::vector<Command> commands_;
  ClientConfig cfg_;
  std::vector<int> retries_;
};

}  // namespace paxsim
