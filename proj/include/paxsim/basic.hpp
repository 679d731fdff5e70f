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

// Single-decree Paxos: one round of the prepare/respond and accept/accepted
// phases, with learners counting accepted votes.

#pragma once

#include <optional>

#include "paxsim/process.hpp"

namespace paxsim {

/// Pool the proposer draws from when no response reports a prior proposal.
inline constexpr Value kAnyValueMin = 1;
inline constexpr Value kAnyValueMax = 100;

class Proposer final : public Process {
 public:
  enum class Phase { init, awaiting_responses, done };

  /// `majority` is the set prepares go to; `acceptors` sizes the quorum.
  Proposer(ProcessId self, ProcessSet acceptors, std::optional<ProcessSet> majority = {});

  /// Sends prepare(n) to the majority set. Throws std::logic_error unless in init.
  Effects start(StepContext& ctx) override;
  bool step(StepContext& ctx, Effects& out) override;

  const Ballot& proposal_number() const { return n_; }
  Phase phase() const { return phase_; }
  /// Value sent in the accept, once phase is done.
  std::optional<Value> proposed() const { return proposed_; }

 private:
  ProcessSet acceptors_;
  ProcessSet majority_;
  Ballot n_;
  Phase phase_ = Phase::init;
  std::optional<Value> proposed_;
};

class BasicAcceptor final : public Process {
 public:
  explicit BasicAcceptor(ProcessId self, ProcessSet learners = {});

  void set_learners(ProcessSet learners) { learners_ = std::move(learners); }
  bool step(StepContext&, Effects&) override { return false; }

 protected:
  void on_receive(const Message& m, ProcessId from, StepContext& ctx, Effects& out) override;

 private:
  void on_prepare(const BasicPrepare& m, ProcessId from, Effects& out);
  void on_accept(const BasicAccept& m, Effects& out);

  ProcessSet learners_;
};

class Learner final : public Process {
 public:
  Learner(ProcessId self, ProcessSet acceptors);

  bool step(StepContext& ctx, Effects& out) override;
  /// Set once; never changes afterwards.
  const std::optional<Value>& chosen() const { return chosen_; }

 private:
  ProcessSet acceptors_;
  std::optional<Value> chosen_;
};

}  // namespace paxsim
