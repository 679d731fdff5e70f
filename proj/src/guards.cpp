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

#include "paxsim/guards.hpp"

#include <algorithm>

namespace paxsim::guards {

ProcessSet responders(const MessageHistory& h, const Ballot& n) {
  return select(
      h.received_of<BasicRespond>(), [&](const BasicRespond& m, ProcessId) { return m.n == n; },
      kPeer);
}

std::optional<Value> highest_reported_value(const MessageHistory& h, const Ballot& n) {
  std::optional<AcceptedProposal> best;
  for (auto [m, peer] : h.received_of<BasicRespond>()) {
    if (m.n != n || !m.max_prop) continue;
    if (!best || *best < *m.max_prop) best = m.max_prop;
  }
  if (!best) return std::nullopt;
  return best->v;
}

bool above_all_responded(const MessageHistory& h, const Ballot& n) {
  return forall(h.sent_of<BasicRespond>(),
                [&](const BasicRespond& m, ProcessId) { return m.n < n; });
}

bool responded_above(const MessageHistory& h, const Ballot& n) {
  return exists(h.sent_of<BasicRespond>(), [&](const BasicRespond& m, ProcessId) {
           return n < m.n;
         }).has_value();
}

std::optional<AcceptedProposal> max_sent_accepted(const MessageHistory& h) {
  return max_of(h.sent_of<BasicAccepted>(), kAny, [](const BasicAccepted& m, ProcessId) {
    return AcceptedProposal{m.n, m.v};
  });
}

std::vector<AcceptedProposal> majority_accepted(const MessageHistory& h,
                                                std::size_t n_acceptors) {
  std::map<AcceptedProposal, ProcessSet> senders;
  for (auto [m, peer] : h.received_of<BasicAccepted>()) {
    senders[AcceptedProposal{m.n, m.v}].insert(peer);
  }
  std::vector<AcceptedProposal> out;
  for (const auto& [prop, who] : senders) {
    if (2 * who.size() > n_acceptors) out.push_back(prop);
  }
  return out;
}

std::vector<Command> proposable_requests(const MessageHistory& h) {
  std::vector<Command> out;
  std::set<Command> seen;
  for (auto [req, client] : h.received_of<Request>()) {
    if (!seen.insert(req.c).second) continue;
    const bool all_taken =
        forall(h.sent_of<Propose>(), [&](const Propose& p, ProcessId) {
          if (p.c != req.c) return true;
          return exists(h.received_at<Decision>(p.s), [&](const Decision& d, ProcessId) {
                   return d.c != req.c;
                 }).has_value();
        });
    if (all_taken) out.push_back(req.c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::set<Command> decisions_at(const MessageHistory& h, Slot s) {
  return select(h.received_at<Decision>(s), kAny, [](const Decision& d, ProcessId) { return d.c; });
}

bool decided_before(const MessageHistory& h, const Command& c, Slot before) {
  return exists(h.received_of<Decision>(), [&](const Decision& d, ProcessId) {
           return d.c == c && d.s < before;
         }).has_value();
}

std::optional<Command> proposed_at(const MessageHistory& h, Slot s) {
  auto w = exists(h.sent_at<Propose>(s), kAny);
  if (!w) return std::nullopt;
  return w->first.c;
}

std::size_t count_1b(const MessageHistory& h, const Ballot& ballot) {
  return count_distinct(
      h.received_of<M1b>(), [&](const M1b& m, ProcessId) { return m.b == ballot; }, kPeer);
}

std::set<PValue> pvalues_from_1b(const MessageHistory& h, const Ballot& ballot) {
  std::set<PValue> ps;
  for (auto [m, peer] : h.received_of<M1b>()) {
    if (m.b == ballot) ps.insert(m.accepted.begin(), m.accepted.end());
  }
  return ps;
}

std::map<Slot, Command> max_ballot_per_slot(const std::set<PValue>& ps) {
  struct Top {
    const PValue* p;
    bool conflict;
  };
  std::map<Slot, Top> best;
  for (const auto& p : ps) {
    auto [it, fresh] = best.try_emplace(p.slot, Top{&p, false});
    if (fresh) continue;
    auto& top = it->second;
    if (top.p->ballot < p.ballot) {
      top = {&p, false};
    } else if (top.p->ballot == p.ballot && top.p->command != p.command) {
      top.conflict = true;
    }
  }
  std::map<Slot, Command> out;
  for (const auto& [s, top] : best) {
    if (top.conflict) {
      throw SafetyViolation("two commands accepted at slot " + std::to_string(s) + " under ballot " +
                            to_string(top.p->ballot));
    }
    out.emplace(s, top.p->command);
  }
  return out;
}

std::vector<std::pair<Slot, Command>> unclaimed_proposals(const MessageHistory& h,
                                                          const Ballot& ballot) {
  std::set<std::pair<Slot, Command>> out;
  for (auto [p, from] : h.received_of<Propose>()) {
    const bool claimed = exists(h.sent_at<M2a>(p.s), [&](const M2a& m, ProcessId) {
                           return m.b == ballot;
                         }).has_value();
    if (!claimed) out.emplace(p.s, p.c);
  }
  return {out.begin(), out.end()};
}

std::size_t count_2b(const MessageHistory& h, const Ballot& ballot, Slot s, const Command& c) {
  return count_distinct(
      h.received_at<M2b>(s), [&](const M2b& m, ProcessId) { return m.b == ballot && m.c == c; },
      kPeer);
}

std::vector<std::pair<Slot, Command>> decidable(const MessageHistory& h, const Ballot& ballot,
                                                std::size_t quorum) {
  std::map<std::pair<Slot, Command>, ProcessSet> votes;
  for (auto [m, from] : h.received_of<M2b>()) {
    if (m.b == ballot) votes[{m.s, m.c}].insert(from);
  }
  std::vector<std::pair<Slot, Command>> out;
  for (const auto& [sc, who] : votes) {
    if (who.size() < quorum) continue;
    const bool announced = exists(h.sent_at<Decision>(sc.first), [&](const Decision& d, ProcessId) {
                             return d.c == sc.second;
                           }).has_value();
    if (!announced) out.push_back(sc);
  }
  return out;
}

std::optional<Ballot> preempted_by(const MessageHistory& h, const Ballot& ballot) {
  return max_of(
      h.received_of<Preempt>(), [&](const Preempt& m, ProcessId) { return ballot < m.b; },
      [](const Preempt& m, ProcessId) { return m.b; });
}

std::map<Slot, Command> outstanding_2a(const MessageHistory& h, const Ballot& ballot) {
  std::map<Slot, Command> out;
  for (auto [m, to] : h.sent_of<M2a>()) {
    if (m.b != ballot || out.contains(m.s)) continue;
    if (h.sent_at<Decision>(m.s).empty()) out.emplace(m.s, m.c);
  }
  return out;
}

std::optional<Command> sent_decision(const MessageHistory& h, Slot s) {
  auto w = exists(h.sent_at<Decision>(s), kAny);
  if (!w) return std::nullopt;
  return w->first.c;
}

bool pings_answered(const MessageHistory& h, const ProcessId& target, std::int64_t r) {
  const auto pongs = select(
      h.received_of<Pong>(), [&](const Pong&, ProcessId from) { return from == target; },
      [](const Pong& q, ProcessId) { return std::pair{q.r, q.t}; });
  return forall(h.sent_of<Ping>(), [&](const Ping& p, ProcessId to) {
    return to != target || p.r != r || pongs.contains({p.r, p.t});
  });
}

bool above_all_1b(const MessageHistory& h, const Ballot& b) {
  return forall(h.sent_of<M1b>(), [&](const M1b& m, ProcessId) { return m.b < b; });
}

bool sent_1b_above(const MessageHistory& h, const Ballot& b) {
  return exists(h.sent_of<M1b>(), [&](const M1b& m, ProcessId) { return b < m.b; }).has_value();
}

std::optional<Ballot> max_prepared(const MessageHistory& h) {
  return max_of(h.sent_of<M1b>(), kAny, [](const M1b& m, ProcessId) { return m.b; });
}

std::set<PValue> accepted_full(const MessageHistory& h) {
  return select(h.sent_of<M2b>(), kAny,
                [](const M2b& m, ProcessId) { return PValue{m.b, m.s, m.c}; });
}

std::set<PValue> accepted_reduced(const MessageHistory& h) {
  std::map<Slot, Ballot> top;
  for (auto [m, to] : h.sent_of<M2b>()) {
    auto [it, fresh] = top.try_emplace(m.s, m.b);
    if (!fresh && it->second < m.b) it->second = m.b;
  }
  return select(
      h.sent_of<M2b>(), [&](const M2b& m, ProcessId) { return m.b == top.at(m.s); },
      [](const M2b& m, ProcessId) { return PValue{m.b, m.s, m.c}; });
}

std::optional<Ballot> max_received_ballot(const MessageHistory& h) {
  auto a = max_of(h.received_of<M1a>(), kAny, [](const M1a& m, ProcessId) { return m.b; });
  auto b = max_of(h.received_of<M2a>(), kAny, [](const M2a& m, ProcessId) { return m.b; });
  if (!a) return b;
  if (!b) return a;
  return std::max(*a, *b);
}

}  // namespace paxsim::guards
