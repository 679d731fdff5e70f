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

#include "paxsim/multi.hpp"

#include <sstream>

#include "paxsim/guards.hpp"

namespace paxsim {

ApplyFn kv_apply() {
  return [](const Operation& op, AppState state) -> std::pair<AppState, std::string> {
    const auto* app = std::get_if<AppOp>(&op);
    if (app == nullptr) return {std::move(state), ""};
    std::istringstream in(app->payload);
    std::string verb, key, value;
    in >> verb >> key;
    std::getline(in >> std::ws, value);
    if (verb == "put") {
      state[key] = value;
      return {std::move(state), value};
    }
    if (verb == "append") {
      state[key] += value;
      std::string result = state[key];
      return {std::move(state), result};
    }
    if (verb == "get") {
      auto it = state.find(key);
      std::string result = it == state.end() ? "" : it->second;
      return {std::move(state), result};
    }
    return {std::move(state), "error"};
  };
}

// ---------------------------------------------------------------- Replica

Replica::Replica(ProcessId self, ProcessSet leaders, VariantConfig cfg, ApplyFn apply)
    : Process(self), leaders_(std::move(leaders)), cfg_(cfg), apply_(std::move(apply)) {
  cfg_.validate();
  if (leaders_.empty()) throw ConfigError("replica needs at least one leader");
}

bool Replica::propose_enabled() const {
  return slot_in_ < slot_out_ + cfg_.window && !guards::proposable_requests(history_).empty();
}

bool Replica::step(StepContext& ctx, Effects& out) {
  const bool can_propose = propose_enabled();
  const bool can_apply = !history_.received_at<Decision>(slot_out_).empty();
  if (can_propose && can_apply) {
    return ctx.chooser.pick(2) == 0 ? try_propose(ctx, out) : try_apply(ctx, out);
  }
  if (can_propose) return try_propose(ctx, out);
  if (can_apply) return try_apply(ctx, out);
  return false;
}

bool Replica::try_propose(StepContext& ctx, Effects& out) {
  if (slot_in_ >= slot_out_ + cfg_.window) return false;
  const auto candidates = guards::proposable_requests(history_);
  if (candidates.empty()) return false;
  const Command c = candidates[ctx.chooser.pick(candidates.size())];

  const Slot back = slot_in_ - cfg_.window;
  if (back >= kFirstSlot) {
    auto reconfig = exists(history_.received_at<Decision>(back), [](const Decision& d, ProcessId) {
      return is_reconfig(d.c.op);
    });
    if (reconfig) leaders_ = std::get<ReconfigOp>(reconfig->first.c.op).leaders;
  }
  if (history_.received_at<Decision>(slot_in_).empty()) {
    send(out, Propose{slot_in_, c}, leaders_);
    if (cfg_.fix_replica_repropose) {
      out.arm({TimerKind::replica_repropose, slot_in_}, cfg_.repropose_after());
    }
  }
  ++slot_in_;
  return true;
}

bool Replica::try_apply(StepContext&, Effects& out) {
  auto first = exists(history_.received_at<Decision>(slot_out_), kAny);
  if (!first) return false;
  if (guards::decisions_at(history_, slot_out_).size() > 1) conflicts_.push_back(slot_out_);

  const Command c = first->first.c;
  if (!guards::decided_before(history_, c, slot_out_) && !is_reconfig(c.op)) {
    auto [next, result] = apply_(c.op, std::move(state_));
    state_ = std::move(next);
    send(out, Response{c.cmd_id, result}, c.client);
    applied_.push_back({slot_out_, c, result});
    out.outputs.push_back(applied_.back());
  }
  ++slot_out_;
  return true;
}

void Replica::on_receive(const Message& m, ProcessId, StepContext&, Effects& out) {
  if (!cfg_.fix_replica_repropose) return;
  if (const auto* d = std::get_if<Decision>(&m)) {
    out.cancel({TimerKind::replica_repropose, d->s});
  }
}

Effects Replica::on_timer(const TimerTag& tag, StepContext&) {
  Effects out;
  if (tag.kind != TimerKind::replica_repropose || !cfg_.fix_replica_repropose) return out;
  const Slot s = tag.a;
  if (!history_.received_at<Decision>(s).empty()) return out;
  if (auto c = guards::proposed_at(history_, s)) {
    send(out, Propose{s, *c}, leaders_);
    out.arm({TimerKind::replica_repropose, s}, cfg_.repropose_after());
  }
  return out;
}

// ---------------------------------------------------------------- Leader

Leader::Leader(ProcessId self, ProcessSet acceptors, ProcessSet replicas, VariantConfig cfg)
    : Process(self),
      acceptors_(std::move(acceptors)),
      replicas_(std::move(replicas)),
      cfg_(cfg),
      quorum_(static_cast<std::size_t>(quorum_size(static_cast<std::int64_t>(acceptors_.size())))),
      ballot_{0, self} {
  cfg_.validate();
}

Effects Leader::start(StepContext& ctx) {
  Effects out;
  ballot_ = Ballot{0, self_};
  enter_phase1(ctx, out);
  return out;
}

void Leader::enter_phase1(StepContext&, Effects& out) {
  phase_ = Phase::phase1;
  monitor_.reset();
  ++rounds_attempted_;
  send(out, M1a{ballot_}, acceptors_);
  if (cfg_.fix_leader_phase1_timeout) {
    out.arm({TimerKind::leader_phase1, ballot_.round}, cfg_.phase1_after());
  }
}

void Leader::leave_ballot(Effects& out) {
  if (cfg_.fix_leader_phase1_timeout) out.cancel({TimerKind::leader_phase1, ballot_.round});
  if (progress_armed_) {
    out.cancel({TimerKind::leader_progress, ballot_.round});
    progress_armed_ = false;
  }
  if (cfg_.fix_leader_resend_2a && phase_ == Phase::phase2) {
    for (const auto& [s, c] : guards::outstanding_2a(history_, ballot_)) {
      out.cancel({TimerKind::leader_resend_2a, s, ballot_.round});
    }
  }
}

void Leader::send_2a(Slot s, const Command& c, Effects& out) {
  send(out, M2a{ballot_, s, c}, acceptors_);
  if (cfg_.fix_leader_resend_2a) {
    out.arm({TimerKind::leader_resend_2a, s, ballot_.round}, cfg_.resend_2a_after());
  }
}

// Armed while some 2a of this ballot awaits its majority; reset by every decision.
void Leader::refresh_progress_timer(Effects& out) {
  if (!cfg_.fix_leader_phase2_timeout) return;
  const TimerTag tag{TimerKind::leader_progress, ballot_.round};
  if (guards::outstanding_2a(history_, ballot_).empty()) {
    if (progress_armed_) out.cancel(tag);
    progress_armed_ = false;
  } else {
    out.arm(tag, cfg_.phase2_after());
    progress_armed_ = true;
  }
}

void Leader::preempted(const Ballot& by, StepContext& ctx, Effects& out) {
  leave_ballot(out);
  if (cfg_.failure_detection && by.leader != self_) {
    phase_ = Phase::monitoring;
    monitor_ = MonitorState{by.leader, by.round};
    monitor_tick(ctx, out);
    return;
  }
  ballot_ = Ballot{by.round + 1, self_};
  enter_phase1(ctx, out);
}

void Leader::monitor_tick(StepContext& ctx, Effects& out) {
  const auto& mon = *monitor_;
  if (guards::pings_answered(history_, mon.target, mon.round)) {
    send(out, Ping{mon.round, ctx.now}, mon.target);
    out.arm({TimerKind::leader_ping, mon.round}, cfg_.ping_every());
    return;
  }
  out.cancel({TimerKind::leader_ping, mon.round});
  ballot_ = Ballot{mon.round + 1, self_};
  enter_phase1(ctx, out);
}

bool Leader::step(StepContext& ctx, Effects& out) {
  switch (phase_) {
    case Phase::phase1:
      return phase1_step(ctx, out);
    case Phase::phase2:
      return phase2_step(ctx, out);
    case Phase::monitoring:
      return monitoring_step(ctx, out);
    case Phase::idle:
      return false;
  }
  return false;
}

bool Leader::phase1_step(StepContext& ctx, Effects& out) {
  const bool quorum = guards::count_1b(history_, ballot_) >= quorum_;
  const auto preempt = guards::preempted_by(history_, ballot_);
  if (!quorum && !preempt) return false;

  if (quorum && (!preempt || ctx.chooser.pick(2) == 0)) {
    for (const auto& [s, c] : guards::max_ballot_per_slot(guards::pvalues_from_1b(history_, ballot_))) {
      send_2a(s, c, out);
    }
    if (cfg_.fix_leader_phase1_timeout) out.cancel({TimerKind::leader_phase1, ballot_.round});
    phase_ = Phase::phase2;
    refresh_progress_timer(out);
    return true;
  }
  preempted(*preempt, ctx, out);
  return true;
}

bool Leader::phase2_step(StepContext& ctx, Effects& out) {
  const auto proposals = guards::unclaimed_proposals(history_, ballot_);
  const auto ready = guards::decidable(history_, ballot_, quorum_);
  const auto preempt = guards::preempted_by(history_, ballot_);

  enum Branch { kPropose, kDecide, kPreempt };
  std::vector<Branch> enabled;
  if (!proposals.empty()) enabled.push_back(kPropose);
  if (!ready.empty()) enabled.push_back(kDecide);
  if (preempt) enabled.push_back(kPreempt);
  if (enabled.empty()) return false;

  switch (enabled[ctx.chooser.pick(enabled.size())]) {
    case kPropose: {
      const auto& [s, c] = proposals[ctx.chooser.pick(proposals.size())];
      send_2a(s, c, out);
      if (!progress_armed_) refresh_progress_timer(out);
      break;
    }
    case kDecide: {
      const auto& [s, c] = ready[ctx.chooser.pick(ready.size())];
      send(out, Decision{s, c}, replicas_);
      if (cfg_.fix_leader_resend_2a) out.cancel({TimerKind::leader_resend_2a, s, ballot_.round});
      refresh_progress_timer(out);
      break;
    }
    case kPreempt:
      preempted(*preempt, ctx, out);
      break;
  }
  return true;
}

bool Leader::monitoring_step(StepContext& ctx, Effects& out) {
  const auto& mon = *monitor_;
  auto larger = guards::preempted_by(history_, Ballot{mon.round, mon.target});
  if (!larger) return false;
  out.cancel({TimerKind::leader_ping, mon.round});
  if (larger->leader == self_) {
    ballot_ = Ballot{larger->round + 1, self_};
    enter_phase1(ctx, out);
    return true;
  }
  monitor_ = MonitorState{larger->leader, larger->round};
  monitor_tick(ctx, out);
  return true;
}

void Leader::on_receive(const Message& m, ProcessId from, StepContext&, Effects& out) {
  if (const auto* ping = std::get_if<Ping>(&m)) {
    if (cfg_.failure_detection) send(out, Pong{ping->r, ping->t}, from);
    return;
  }
  if (const auto* p = std::get_if<Propose>(&m)) {
    if (!cfg_.fix_replica_repropose) return;
    if (auto decided = guards::sent_decision(history_, p->s)) {
      send(out, Decision{p->s, *decided}, from);
    }
  }
}

Effects Leader::on_timer(const TimerTag& tag, StepContext& ctx) {
  Effects out;
  switch (tag.kind) {
    case TimerKind::leader_phase1:
      if (cfg_.fix_leader_phase1_timeout && phase_ == Phase::phase1 && ballot_.round == tag.a) {
        ballot_ = Ballot{ballot_.round + 1, self_};
        enter_phase1(ctx, out);
      }
      break;
    case TimerKind::leader_resend_2a: {
      if (!cfg_.fix_leader_resend_2a || phase_ != Phase::phase2 || ballot_.round != tag.b) break;
      const auto outstanding = guards::outstanding_2a(history_, ballot_);
      if (auto it = outstanding.find(tag.a); it != outstanding.end()) send_2a(it->first, it->second, out);
      break;
    }
    case TimerKind::leader_progress:
      if (!cfg_.fix_leader_phase2_timeout || ballot_.round != tag.a) break;
      progress_armed_ = false;
      if (phase_ == Phase::phase2 && !guards::outstanding_2a(history_, ballot_).empty()) {
        leave_ballot(out);
        ballot_ = Ballot{ballot_.round + 1, self_};
        enter_phase1(ctx, out);
      }
      break;
    case TimerKind::leader_ping:
      if (phase_ == Phase::monitoring && monitor_ && monitor_->round == tag.a) monitor_tick(ctx, out);
      break;
    default:
      break;
  }
  return out;
}

// ---------------------------------------------------------------- Acceptor

MultiAcceptor::MultiAcceptor(ProcessId self, VariantConfig cfg) : Process(self), cfg_(cfg) {}

void MultiAcceptor::on_receive(const Message& m, ProcessId from, StepContext&, Effects& out) {
  if (const auto* a = std::get_if<M1a>(&m)) {
    on_1a(*a, from, out);
    on_any(a->b, from, out);
  } else if (const auto* b = std::get_if<M2a>(&m)) {
    on_2a(*b, from, out);
    on_any(b->b, from, out);
  }
}

void MultiAcceptor::on_1a(const M1a& m, ProcessId from, Effects& out) {
  if (!guards::above_all_1b(history_, m.b)) return;
  const auto accepted = reported_accepted(history_, cfg_);
  send(out, M1b{m.b, std::vector<PValue>(accepted.begin(), accepted.end())}, from);
}

void MultiAcceptor::on_2a(const M2a& m, ProcessId from, Effects& out) {
  if (cfg_.useless_reply_mode) {
    // Votes only at exactly its prepared ballot and otherwise reports that ballot.
    const Ballot prepared = guards::max_prepared(history_).value_or(Ballot::bottom());
    if (m.b == prepared) {
      send(out, M2b{m.b, m.s, m.c}, from);
    } else if (prepared < m.b) {
      send(out, M2b{prepared, m.s, m.c}, from);
    }
    return;
  }
  if (guards::sent_1b_above(history_, m.b)) return;
  send(out, M2b{m.b, m.s, m.c}, from);
}

void MultiAcceptor::on_any(const Ballot& b, ProcessId from, Effects& out) {
  const auto maxb = guards::max_received_ballot(history_);
  if (maxb && b < *maxb) send(out, Preempt{*maxb}, from);
}

// ---------------------------------------------------------------- Client

Client::Client(ProcessId self, ProcessSet replicas, std::vector<Operation> ops, ClientConfig cfg)
    : Process(self), replicas_(std::move(replicas)), cfg_(cfg), retries_(ops.size(), 0) {
  if (replicas_.empty()) throw ConfigError("client needs at least one replica");
  commands_.reserve(ops.size());
  for (std::size_t i = 0; i < ops.size(); ++i) {
    commands_.push_back(Command{self, static_cast<std::int64_t>(i + 1), std::move(ops[i])});
  }
}

Effects Client::start(StepContext&) {
  Effects out;
  if (commands_.empty()) return out;
  if (cfg_.interval <= 0) {
    for (std::size_t i = 0; i < commands_.size(); ++i) issue(i, out);
    return out;
  }
  issue(0, out);
  if (commands_.size() > 1) out.arm({TimerKind::client_send, 1}, cfg_.interval);
  return out;
}

void Client::issue(std::size_t i, Effects& out) {
  send(out, Request{commands_[i]}, replicas_);
  if (cfg_.retry_after > 0 && cfg_.max_retries > 0) {
    out.arm({TimerKind::client_retry, commands_[i].cmd_id}, cfg_.retry_after);
  }
}

Effects Client::on_timer(const TimerTag& tag, StepContext&) {
  Effects out;
  if (tag.kind == TimerKind::client_send) {
    const auto i = static_cast<std::size_t>(tag.a);
    if (i >= commands_.size()) return out;
    issue(i, out);
    if (i + 1 < commands_.size()) out.arm({TimerKind::client_send, tag.a + 1}, cfg_.interval);
  } else if (tag.kind == TimerKind::client_retry) {
    const auto i = static_cast<std::size_t>(tag.a - 1);
    if (i >= commands_.size() || answered(tag.a) || retries_[i] >= cfg_.max_retries) return out;
    ++retries_[i];
    send(out, Request{commands_[i]}, replicas_);
    out.arm({TimerKind::client_retry, tag.a}, cfg_.retry_after);
  }
  return out;
}

void Client::on_receive(const Message& m, ProcessId, StepContext&, Effects& out) {
  if (const auto* r = std::get_if<Response>(&m)) {
    if (cfg_.retry_after > 0 && cfg_.max_retries > 0) out.cancel({TimerKind::client_retry, r->cmd_id});
  }
}

bool Client::answered(std::int64_t cmd_id) const {
  return exists(history_.received_of<Response>(), [&](const Response& r, ProcessId) {
           return r.cmd_id == cmd_id;
         }).has_value();
}

std::vector<Command> Client::pending() const {
  std::vector<Command> out;
  for (const auto& c : commands_) {
    if (!answered(c.cmd_id)) out.push_back(c);
  }
  return out;
}

}  // namespace paxsim
