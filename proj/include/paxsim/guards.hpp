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

// The history queries that every await condition and receive-handler test in
// the protocols is written against. Each one is a pure function of a history's
// content and is checked against a full-scan oracle in tests/guards_test.cpp.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "paxsim/history.hpp"

namespace paxsim::guards {

// --- Basic Paxos ---

/// Distinct senders a of received ('respond', =n, _) from a.
ProcessSet responders(const MessageHistory& h, const Ballot& n);

/// Value of the received response to n carrying the highest-numbered pair, if any.
std::optional<Value> highest_reported_value(const MessageHistory& h, const Ballot& n);

/// each sent ('respond', n2, _) has n > n2.
bool above_all_responded(const MessageHistory& h, const Ballot& n);

/// some sent ('respond', n2, _) has n2 > n.
bool responded_above(const MessageHistory& h, const Ballot& n);

/// The sent ('accepted', n, v) with maximum n.
std::optional<AcceptedProposal> max_sent_accepted(const MessageHistory& h);

/// All (n, v) whose received ('accepted', n, v) come from more than half of
/// the acceptors, in (n, v) order.
std::vector<AcceptedProposal> majority_accepted(const MessageHistory& h, std::size_t n_acceptors);

// --- Multi-Paxos replica ---

/// Received requests c such that each sent ('propose', s, =c) has some
/// received ('decision', =s, c2) with c2 != c. Duplicates collapsed, sorted.
std::vector<Command> proposable_requests(const MessageHistory& h);

/// Commands of received decisions for slot s.
std::set<Command> decisions_at(const MessageHistory& h, Slot s);

/// some received ('decision', s, =c) has s < before.
bool decided_before(const MessageHistory& h, const Command& c, Slot before);

/// Command of the (only) sent proposal for slot s.
std::optional<Command> proposed_at(const MessageHistory& h, Slot s);

// --- Multi-Paxos leader ---

/// Distinct senders of received ('1b', =ballot, _).
std::size_t count_1b(const MessageHistory& h, const Ballot& ballot);

/// Union of accepted sets in received ('1b', =ballot, accepted).
std::set<PValue> pvalues_from_1b(const MessageHistory& h, const Ballot& ballot);

/// For each slot in ps, the command of its maximum-ballot pvalue. Throws
/// SafetyViolation when two different commands share the maximum ballot.
std::map<Slot, Command> max_ballot_per_slot(const std::set<PValue>& ps);

/// Received ('propose', s, c) with no sent ('2a', =ballot, =s, _).
std::vector<std::pair<Slot, Command>> unclaimed_proposals(const MessageHistory& h,
                                                          const Ballot& ballot);

/// (s, c) whose received ('2b', =ballot, =s, =c) come from at least quorum
/// distinct acceptors and for which no ('decision', s, c) was sent yet.
std::vector<std::pair<Slot, Command>> decidable(const MessageHistory& h, const Ballot& ballot,
                                                std::size_t quorum);

/// Distinct senders of received ('2b', =ballot, =s, =c).
std::size_t count_2b(const MessageHistory& h, const Ballot& ballot, Slot s, const Command& c);

/// Maximum ballot among received preempts that exceeds ballot.
std::optional<Ballot> preempted_by(const MessageHistory& h, const Ballot& ballot);

/// Slots with a sent ('2a', =ballot, s, _) and no sent decision for s.
std::map<Slot, Command> outstanding_2a(const MessageHistory& h, const Ballot& ballot);

/// Command of a sent ('decision', =s, c).
std::optional<Command> sent_decision(const MessageHistory& h, Slot s);

/// each sent ('ping', =r, t) to =target has received ('pong', r, t) from target.
bool pings_answered(const MessageHistory& h, const ProcessId& target, std::int64_t r);

// --- Multi-Paxos acceptor ---

/// each sent ('1b', b2, _) has b > b2.
bool above_all_1b(const MessageHistory& h, const Ballot& b);

/// some sent ('1b', b2, _) has b2 > b.
bool sent_1b_above(const MessageHistory& h, const Ballot& b);

/// Maximum ballot among sent 1b messages.
std::optional<Ballot> max_prepared(const MessageHistory& h);

/// {(b, s, c): sent ('2b', b, s, c)}.
std::set<PValue> accepted_full(const MessageHistory& h);

/// The same set restricted to the maximum ballot per slot.
std::set<PValue> accepted_reduced(const MessageHistory& h);

/// max of ballots in received 1a and 2a messages.
std::optional<Ballot> max_received_ballot(const MessageHistory& h);

}  // namespace paxsim::guards
