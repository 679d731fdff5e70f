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

#include <cstdint>
#include <set>

#include "paxsim/history.hpp"
#include "paxsim/process.hpp"

namespace paxsim {

/// Switches layered over the baseline Multi-Paxos roles. All off means the
/// unoptimized algorithm with the same-ballot 2b reply.
struct VariantConfig {
  bool state_reduction = false;
  bool failure_detection = false;
  bool fix_replica_repropose = false;
  bool fix_leader_phase1_timeout = false;
  bool fix_leader_resend_2a = false;
  bool fix_leader_phase2_timeout = false;
  /// Acceptors answer an unprepared 2a with their max prepared ballot.
  bool useless_reply_mode = false;
  Tick timeout = 10;
  std::int64_t window = 5;

  // Per-timer overrides; 0 means use `timeout`.
  Tick ping_period = 0;
  Tick repropose_timeout = 0;
  Tick phase1_timeout = 0;
  Tick resend_2a_timeout = 0;
  Tick phase2_timeout = 0;

  bool any_timer() const {
    return failure_detection || fix_replica_repropose || fix_leader_phase1_timeout ||
           fix_leader_resend_2a || fix_leader_phase2_timeout;
  }
  bool any_leader_fix() const {
    return fix_leader_phase1_timeout || fix_leader_resend_2a || fix_leader_phase2_timeout;
  }
  void enable_all_fixes() {
    fix_replica_repropose = fix_leader_phase1_timeout = fix_leader_resend_2a =
        fix_leader_phase2_timeout = true;
  }

  Tick ping_every() const { return ping_period > 0 ? ping_period : timeout; }
  Tick repropose_after() const { return repropose_timeout > 0 ? repropose_timeout : timeout; }
  Tick phase1_after() const { return phase1_timeout > 0 ? phase1_timeout : timeout; }
  Tick resend_2a_after() const { return resend_2a_timeout > 0 ? resend_2a_timeout : timeout; }
  Tick phase2_after() const { return phase2_timeout > 0 ? phase2_timeout : timeout; }

  /// Throws ConfigError on window < 1 or a non-positive timeout with timers on.
  void validate() const;

  friend bool operator==(const VariantConfig&, const VariantConfig&) = default;
};

/// Per-slot maximum-ballot restriction of the acceptor's 2b history.
std::set<PValue> reduced_accepted(const MessageHistory& history);

/// Accepted set an acceptor reports in 1b under cfg. In useless-reply mode
/// only 2b messages that echo a received 2a count as votes.
std::set<PValue> reported_accepted(const MessageHistory& history, const VariantConfig& cfg);

/// A preempted leader watching the leader of the preempting ballot.
struct MonitorState {
  ProcessId target;
  std::int64_t round = 0;
};

}  // namespace paxsim
