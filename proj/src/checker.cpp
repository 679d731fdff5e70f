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

#include "paxsim/checker.hpp"

#include <algorithm>
#include <memory>
#include <set>
#include <tuple>

#include "paxsim/json_codec.hpp"

namespace paxsim {

using nlohmann::json;

namespace {

template <class T>
const T* sent_as(const TraceEvent& e) {
  if (e.kind != EventKind::send || !e.message) return nullptr;
  return std::get_if<T>(&*e.message);
}

template <class T>
const T* delivered_as(const TraceEvent& e) {
  if (e.kind != EventKind::deliver || !e.message) return nullptr;
  return std::get_if<T>(&*e.message);
}

}  // namespace

void Verdict::add(Violation v) {
  violations.push_back(std::move(v));
  safe = false;
}

void Verdict::absorb(const Verdict& other) {
  for (const auto& v : other.violations) add(v);
}

bool Verdict::has(const std::string& invariant) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.invariant == invariant; });
}

json verdict_to_json(const Verdict& v) {
  json violations = json::array();
  for (const auto& x : v.violations) {
    violations.push_back({{"invariant", x.invariant}, {"detail", x.detail}, {"evidence", x.evidence}});
  }
  const auto& m = v.metrics;
  return {{"safe", v.safe},
          {"violations", violations},
          {"metrics",
           {{"decisions", m.decisions},
            {"ballot_rounds_attempted", m.ballot_rounds_attempted},
            {"max_1b_payload_pvalues", m.max_1b_payload_pvalues},
            {"messages_by_tag", m.messages_by_tag},
            {"stuck", m.stuck}}}};
}

Verdict check_safety(const RunTrace& trace, std::optional<ValuePool> pool) {
  Verdict v;
  std::set<Command> requested;
  for (const auto& e : trace.events) {
    if (const auto* r = sent_as<Request>(e)) requested.insert(r->c);
  }

  std::map<Slot, std::pair<Command, std::size_t>> first;
  std::set<std::pair<Slot, Command>> conflicts;
  std::set<std::pair<Slot, Command>> unrequested;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const auto* d = sent_as<Decision>(trace.events[i]);
    if (d == nullptr) continue;
    auto [it, fresh] = first.try_emplace(d->s, d->c, i);
    if (!fresh && it->second.first != d->c && conflicts.insert({d->s, d->c}).second) {
      v.add({"per-slot agreement",
             "slot " + std::to_string(d->s) + " decided " + to_string(it->second.first) + " and " +
                 to_string(d->c),
             {it->second.second, i}});
    }
    if (!requested.contains(d->c) && unrequested.insert({d->s, d->c}).second) {
      v.add({"decided-from-proposed",
             "slot " + std::to_string(d->s) + " decided unrequested " + to_string(d->c),
             {i}});
    }
  }

  if (pool) {
    std::set<Value> accepted_values;
    for (const auto& e : trace.events) {
      if (const auto* a = sent_as<BasicAccept>(e)) accepted_values.insert(a->v);
    }
    std::optional<std::pair<Value, std::size_t>> agreed;
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
      const auto& e = trace.events[i];
      if (e.kind != EventKind::chosen || !e.output) continue;
      const Value value = std::get<ChosenOutput>(*e.output).value;
      if (!agreed) {
        agreed = {value, i};
      } else if (agreed->first != value) {
        v.add({"learner agreement",
               to_string(e.src) + " chose " + std::to_string(value) + ", earlier " +
                   std::to_string(agreed->first),
               {agreed->second, i}});
      }
      if (value < pool->min || value > pool->max) {
        v.add({"chosen-value validity", std::to_string(value) + " lies outside the value pool", {i}});
      } else if (!accepted_values.contains(value)) {
        v.add({"chosen-value validity", std::to_string(value) + " was never proposed", {i}});
      }
    }
  }
  v.metrics = compute_metrics(trace);
  return v;
}

ReplicaLogs replica_logs(const RunTrace& trace) {
  ReplicaLogs logs;
  for (const auto& e : trace.events) {
    if (e.kind == EventKind::apply && e.output) logs[e.src].push_back(std::get<AppliedOutput>(*e.output));
  }
  return logs;
}

Verdict check_application(const RunTrace& trace, const ReplicaLogs& logs) {
  Verdict v;
  for (const auto& [replica, log] : logs) {
    std::set<Command> seen;
    for (std::size_t i = 0; i < log.size(); ++i) {
      const auto& a = log[i];
      if (!seen.insert(a.command).second) {
        v.add({"duplicate apply", to_string(replica) + " applied " + to_string(a.command) + " twice", {}});
      }
      if (is_reconfig(a.command.op)) {
        v.add({"reconfig applied",
               to_string(replica) + " applied reconfiguration at slot " + std::to_string(a.slot), {}});
      }
      if (i > 0 && a.slot <= log[i - 1].slot) {
        v.add({"apply order",
               to_string(replica) + " applied slot " + std::to_string(a.slot) + " after slot " +
                   std::to_string(log[i - 1].slot),
               {}});
      }
    }
  }
  for (auto a = logs.begin(); a != logs.end(); ++a) {
    for (auto b = std::next(a); b != logs.end(); ++b) {
      const std::size_t common = std::min(a->second.size(), b->second.size());
      for (std::size_t i = 0; i < common; ++i) {
        if (a->second[i] == b->second[i]) continue;
        v.add({"divergence",
               to_string(a->first) + " and " + to_string(b->first) + " differ at apply " +
                   std::to_string(i + 1),
               {}});
        break;
      }
    }
  }
  v.metrics = compute_metrics(trace);
  return v;
}

bool detect_stuck(const RunTrace& trace, const std::vector<Command>& pending) {
  return !pending.empty() && trace.end.quiescent();
}

std::vector<Command> unanswered_requests(const RunTrace& trace) {
  std::set<Command> requested;
  std::set<std::pair<ProcessId, std::int64_t>> answered;
  for (const auto& e : trace.events) {
    if (const auto* r = sent_as<Request>(e)) requested.insert(r->c);
    if (const auto* r = delivered_as<Response>(e)) answered.insert({e.dst, r->cmd_id});
  }
  std::vector<Command> out;
  for (const auto& c : requested) {
    if (!answered.contains({c.client, c.cmd_id})) out.push_back(c);
  }
  return out;
}

Metrics compute_metrics(const RunTrace& trace) {
  Metrics m;
  std::set<Slot> decided;
  std::set<Ballot> ballots;
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::send || !e.message) continue;
    ++m.messages_by_tag[std::string(tag_name(*e.message))];
    if (const auto* d = std::get_if<Decision>(&*e.message)) decided.insert(d->s);
    if (const auto* a = std::get_if<M1a>(&*e.message)) ballots.insert(a->b);
    if (const auto* b = std::get_if<M1b>(&*e.message)) {
      m.max_1b_payload_pvalues =
          std::max(m.max_1b_payload_pvalues, static_cast<std::int64_t>(b->accepted.size()));
    }
  }
  m.decisions = static_cast<std::int64_t>(decided.size());
  m.ballot_rounds_attempted = static_cast<std::int64_t>(ballots.size());
  return m;
}

Simulator::Observer agreement_watch() {
  auto decided = std::make_shared<std::map<Slot, Command>>();
  return [decided](const TraceEvent& e) {
    const auto* d = sent_as<Decision>(e);
    if (d == nullptr) return true;
    auto [it, fresh] = decided->try_emplace(d->s, d->c);
    return fresh || it->second == d->c;
  };
}

QuorumUsage analyze_2b_usage(const RunTrace& trace) {
  struct Vote {
    ProcessId acceptor;
    Ballot ballot;
    Command command;
    bool on_ballot;
  };
  std::size_t n_acceptors = 0;
  for (const auto& e : trace.events) {
    if (e.kind == EventKind::start && e.dst.role == Role::acceptor) ++n_acceptors;
  }
  const std::size_t quorum = n_acceptors == 0 ? 1 : static_cast<std::size_t>(quorum_size(
                                                        static_cast<std::int64_t>(n_acceptors)));

  QuorumUsage u;
  std::map<ProcessId, std::set<std::tuple<Ballot, Slot, Command>>> sent_2a;
  std::map<std::pair<ProcessId, Slot>, Ballot> latest_2a;
  std::map<std::pair<ProcessId, Slot>, std::vector<Vote>> votes;
  std::set<std::tuple<ProcessId, Slot, Command>> decided;

  for (const auto& e : trace.events) {
    if (const auto* a = sent_as<M2a>(e)) {
      sent_2a[e.src].insert({a->b, a->s, a->c});
      latest_2a[{e.src, a->s}] = a->b;
    } else if (const auto* b = delivered_as<M2b>(e)) {
      if (e.dst.role != Role::leader) continue;
      const bool on = sent_2a[e.dst].contains({b->b, b->s, b->c});
      (on ? u.on_ballot : u.off_ballot) += 1;
      if (!on) ++u.off_ballot_by_acceptor[e.src];
      votes[{e.dst, b->s}].push_back({e.src, b->b, b->c, on});
    } else if (const auto* d = sent_as<Decision>(e)) {
      if (e.src.role != Role::leader || !decided.insert({e.src, d->s, d->c}).second) continue;
      auto lb = latest_2a.find({e.src, d->s});
      std::set<ProcessId> supporters;
      std::int64_t off = 0;
      for (const auto& vote : votes[{e.src, d->s}]) {
        if (!vote.on_ballot) {
          ++off;
        } else if (lb != latest_2a.end() && vote.ballot == lb->second && vote.command == d->c) {
          supporters.insert(vote.acceptor);
        }
      }
      for (const auto& a : supporters) ++u.counted_by_acceptor[a];
      u.counted += static_cast<std::int64_t>(supporters.size());
      if (supporters.size() < quorum) {
        ++u.decisions_without_majority;
        u.off_ballot_counted += off;
      }
    }
  }
  return u;
}

std::int64_t decisions_after(const RunTrace& trace, ProcessId leader, std::size_t from) {
  std::set<Slot> slots;
  for (std::size_t i = from; i < trace.events.size(); ++i) {
    const auto& e = trace.events[i];
    if (e.src != leader) continue;
    if (const auto* d = sent_as<Decision>(e)) slots.insert(d->s);
  }
  return static_cast<std::int64_t>(slots.size());
}

}  // namespace paxsim
