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

// Offline oracles over a finished RunTrace, plus an online watcher that can
// halt a simulation at the first agreement violation.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "paxsim/simnet.hpp"

namespace paxsim {

struct Violation {
  std::string invariant;
  std::string detail;
  /// Indexes into RunTrace::events.
  std::vector<std::size_t> evidence;
};

struct Metrics {
  /// Distinct slots with at least one Decision sent.
  std::int64_t decisions = 0;
  /// Distinct ballots carried by 1a messages.
  std::int64_t ballot_rounds_attempted = 0;
  /// Largest accepted set carried by a single 1b.
  std::int64_t max_1b_payload_pvalues = 0;
  std::map<std::string, std::int64_t> messages_by_tag;
  bool stuck = false;
};

struct Verdict {
  bool safe = true;
  std::vector<Violation> violations;
  Metrics metrics;

  void add(Violation v);
  /// Appends other's violations; metrics are kept from this verdict.
  void absorb(const Verdict& other);
  bool has(const std::string& invariant) const;
};

nlohmann::json verdict_to_json(const Verdict& v);

/// Inclusive range of values a proposer may pick without prior proposals.
struct ValuePool {
  Value min = 1;
  Value max = 100;
};

/// Per-slot agreement and decided-from-requested over Decision sends. With a
/// pool, also learner agreement and chosen value validity for single-decree runs.
Verdict check_safety(const RunTrace& trace, std::optional<ValuePool> pool = {});

using ReplicaLogs = std::map<ProcessId, std::vector<AppliedOutput>>;

/// The apply events of each replica, in order.
ReplicaLogs replica_logs(const RunTrace& trace);

/// Duplicate application, reconfiguration applied to state, out-of-order
/// slots at one replica, and divergence between replicas on a common prefix.
Verdict check_application(const RunTrace& trace, const ReplicaLogs& logs);

/// True when the run ended with nothing in flight, no timer armed, and some
/// request still unanswered.
bool detect_stuck(const RunTrace& trace, const std::vector<Command>& pending);

/// Requested commands whose client never received a response.
std::vector<Command> unanswered_requests(const RunTrace& trace);

Metrics compute_metrics(const RunTrace& trace);

/// Seeds the online check: returns an observer that rejects the first
/// Decision conflicting with an earlier one at the same slot.
Simulator::Observer agreement_watch();

/// How the 2b messages delivered to leaders were used.
struct QuorumUsage {
  /// 2b whose ballot matches a 2a the receiving leader sent for that slot and command.
  std::int64_t on_ballot = 0;
  std::int64_t off_ballot = 0;
  /// On-ballot 2b received before the leader's decision for that slot.
  std::int64_t counted = 0;
  /// Off-ballot 2b received before a decision that lacked an on-ballot majority.
  std::int64_t off_ballot_counted = 0;
  /// Decisions sent without an on-ballot majority behind them.
  std::int64_t decisions_without_majority = 0;
  std::map<ProcessId, std::int64_t> counted_by_acceptor;
  std::map<ProcessId, std::int64_t> off_ballot_by_acceptor;
};

QuorumUsage analyze_2b_usage(const RunTrace& trace);

/// Decision sends by `leader` at or after event index `from`.
std::int64_t decisions_after(const RunTrace& trace, ProcessId leader, std::size_t from);

}  // namespace paxsim
