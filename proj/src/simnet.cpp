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

#include "paxsim/simnet.hpp"

#include <algorithm>
#include <array>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "paxsim/json_codec.hpp"

namespace paxsim {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 9> kEventNames = {
    "send", "deliver", "drop", "dup", "timer", "start", "crash", "chosen", "apply"};
constexpr std::array<std::string_view, 4> kReasonNames = {"quiescent", "stopped", "tick_bound",
                                                          "aborted"};
constexpr std::size_t kTimerKinds = 7;

std::optional<Ballot> ballot_of(const Message& m) {
  return std::visit(
      [](const auto& x) -> std::optional<Ballot> {
        if constexpr (requires { x.b; }) {
          return x.b;
        } else if constexpr (requires { x.n; }) {
          return x.n;
        } else {
          return std::nullopt;
        }
      },
      m);
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t process_seed(std::uint64_t seed, ProcessId id) {
  const auto key = (static_cast<std::uint64_t>(id.role) << 32) ^ static_cast<std::uint64_t>(id.index);
  return splitmix(seed ^ splitmix(key + 1));
}

TimerKind parse_timer_kind(std::string_view name) {
  for (std::size_t i = 0; i < kTimerKinds; ++i) {
    if (timer_kind_name(static_cast<TimerKind>(i)) == name) return static_cast<TimerKind>(i);
  }
  throw std::invalid_argument("unknown timer kind '" + std::string(name) + "'");
}

}  // namespace

// ---------------------------------------------------------------- faults

bool ScriptedRule::matches(const Message& m, ProcessId from, ProcessId to, Tick now,
                           bool local) const {
  if (local && !include_local) return false;
  if (tag && *tag != m.index()) return false;
  if (until_tick && now >= *until_tick) return false;
  if (src && *src != from) return false;
  if (dst && *dst != to) return false;
  if (src_role && *src_role != from.role) return false;
  if (dst_role && *dst_role != to.role) return false;
  if (slot && slot_of(m) != slot) return false;
  if (ballot_round) {
    auto b = ballot_of(m);
    if (!b || b->round != *ballot_round) return false;
  }
  return true;
}

void FaultSchedule::validate() const {
  if (drop < 0.0 || drop > 1.0) throw ConfigError("drop probability must lie in [0,1]");
  if (dup < 0.0 || dup > 1.0) throw ConfigError("duplicate probability must lie in [0,1]");
  if (delay_min < 1 || delay_max < delay_min) throw ConfigError("delay bounds must satisfy 1 <= min <= max");
  for (const auto& r : rules) {
    if (r.action == ScriptedRule::Action::delay && r.delay < 1) {
      throw ConfigError("scripted delay must be at least 1 tick");
    }
    if (r.first_n && *r.first_n < 0) throw ConfigError("first_n must be non-negative");
  }
}

// ---------------------------------------------------------------- trace I/O

std::string_view event_kind_name(EventKind k) { return kEventNames.at(static_cast<std::size_t>(k)); }

EventKind parse_event_kind(std::string_view name) {
  for (std::size_t i = 0; i < kEventNames.size(); ++i) {
    if (kEventNames[i] == name) return static_cast<EventKind>(i);
  }
  throw std::invalid_argument("unknown event kind '" + std::string(name) + "'");
}

std::string_view end_reason_name(EndStatus::Reason r) {
  return kReasonNames.at(static_cast<std::size_t>(r));
}

json event_to_json(const TraceEvent& e) {
  json j = {{"tick", e.tick},
            {"kind", event_kind_name(e.kind)},
            {"src", to_string(e.src)},
            {"dst", to_string(e.dst)}};
  if (e.id != 0) j["id"] = e.id;
  if (e.message) j["message"] = message_to_json(*e.message);
  if (e.local) j["local"] = true;
  if (e.timer) {
    j["timer"] = {{"kind", timer_kind_name(e.timer->kind)}, {"a", e.timer->a}, {"b", e.timer->b}};
  }
  if (e.output) {
    if (const auto* c = std::get_if<ChosenOutput>(&*e.output)) {
      j["value"] = c->value;
    } else {
      const auto& a = std::get<AppliedOutput>(*e.output);
      j["slot"] = a.slot;
      j["command"] = a.command;
      j["result"] = a.result;
    }
  }
  return j;
}

TraceEvent event_from_json(const json& j) {
  TraceEvent e;
  e.tick = j.at("tick").get<Tick>();
  e.kind = parse_event_kind(j.at("kind").get<std::string>());
  e.src = parse_process_id(j.at("src").get<std::string>());
  e.dst = parse_process_id(j.at("dst").get<std::string>());
  e.id = j.value("id", std::uint64_t{0});
  e.local = j.value("local", false);
  if (j.contains("message")) e.message = message_from_json(j.at("message"));
  if (j.contains("timer")) {
    const auto& t = j.at("timer");
    e.timer = TimerTag{parse_timer_kind(t.at("kind").get<std::string>()), t.at("a").get<std::int64_t>(),
                       t.at("b").get<std::int64_t>()};
  }
  if (e.kind == EventKind::chosen) e.output = ChosenOutput{j.at("value").get<Value>()};
  if (e.kind == EventKind::apply) {
    e.output = AppliedOutput{j.at("slot").get<Slot>(), j.at("command").get<Command>(),
                             j.at("result").get<std::string>()};
  }
  return e;
}

std::string trace_to_jsonl(const RunTrace& t) {
  std::string out;
  for (const auto& e : t.events) {
    out += event_to_json(e).dump();
    out += '\n';
  }
  json end = {{"kind", "end"},
              {"tick", t.end.tick},
              {"reason", end_reason_name(t.end.reason)},
              {"armed_timers", t.end.armed_timers},
              {"in_flight", t.end.in_flight}};
  if (!t.end.diagnostic.empty()) end["diagnostic"] = t.end.diagnostic;
  out += end.dump();
  out += '\n';
  return out;
}

RunTrace trace_from_jsonl(const std::string& text) {
  RunTrace t;
  std::istringstream in(text);
  std::string line;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.at("kind") == "end") {
      t.end.tick = j.at("tick").get<Tick>();
      const auto reason = j.at("reason").get<std::string>();
      bool known = false;
      for (std::size_t i = 0; i < kReasonNames.size(); ++i) {
        if (kReasonNames[i] == reason) {
          t.end.reason = static_cast<EndStatus::Reason>(i);
          known = true;
        }
      }
      if (!known) throw std::invalid_argument("unknown end reason '" + reason + "'");
      t.end.armed_timers = j.at("armed_timers").get<std::size_t>();
      t.end.in_flight = j.at("in_flight").get<std::size_t>();
      t.end.diagnostic = j.value("diagnostic", std::string{});
      ended = true;
      continue;
    }
    t.events.push_back(event_from_json(j));
  }
  if (!ended) throw std::invalid_argument("trace has no end record");
  return t;
}

// ---------------------------------------------------------------- simulator

Simulator::Simulator(std::uint64_t seed, FaultSchedule faults, SimOptions opts)
    : seed_(seed), faults_(std::move(faults)), opts_(opts), net_rng_(splitmix(seed)) {
  faults_.validate();
  rule_hits_.assign(faults_.rules.size(), 0);
}

Process& Simulator::add(std::unique_ptr<Process> p, Tick start_tick) {
  const ProcessId id = p->id();
  if (procs_.contains(id)) throw ConfigError("duplicate process " + to_string(id));
  if (starts_scheduled_) throw ConfigError("processes must be added before the run starts");
  choosers_.emplace(id, Chooser(process_seed(seed_, id)));
  start_ticks_[id] = start_tick;
  host_of_[id] = next_host_++;
  return *procs_.emplace(id, std::move(p)).first->second;
}

void Simulator::set_start_tick(ProcessId id, Tick t) {
  if (!procs_.contains(id)) throw ConfigError("unknown process " + to_string(id));
  if (t < 0) throw ConfigError("start tick must be non-negative");
  start_ticks_[id] = t;
}

void Simulator::colocate(const std::vector<ProcessId>& group) {
  const std::size_t host = next_host_++;
  for (const auto& id : group) {
    if (!procs_.contains(id)) throw ConfigError("unknown process " + to_string(id));
    for (const auto& [other, h] : host_of_) {
      if (other != id && h == host_of_.at(id) && std::find(group.begin(), group.end(), other) == group.end()) {
        throw ConfigError(to_string(id) + " already shares a host");
      }
    }
  }
  for (const auto& id : group) host_of_[id] = host;
}

bool Simulator::same_host(ProcessId a, ProcessId b) const {
  auto ia = host_of_.find(a);
  auto ib = host_of_.find(b);
  return ia != host_of_.end() && ib != host_of_.end() && ia->second == ib->second;
}

void Simulator::schedule_crash(ProcessId id, Tick t) {
  if (!procs_.contains(id)) throw ConfigError("unknown process " + to_string(id));
  Event e;
  e.tick = t;
  e.kind = Event::Kind::crash;
  e.dst = id;
  push(std::move(e));
}

Process* Simulator::find(ProcessId id) const {
  auto it = procs_.find(id);
  return it == procs_.end() ? nullptr : it->second.get();
}

std::vector<ProcessId> Simulator::process_ids() const {
  std::vector<ProcessId> out;
  for (const auto& [id, p] : procs_) out.push_back(id);
  return out;
}

void Simulator::push(Event e) {
  e.seq = next_seq_++;
  queue_.push(std::move(e));
}

bool Simulator::record(TraceEvent e) {
  trace_.events.push_back(std::move(e));
  if (observer_ && !observer_(trace_.events.back())) halted_ = true;
  return !halted_;
}

void Simulator::arm_timer(ProcessId owner, const TimerTag& tag, Tick after) {
  if (after <= 0) throw std::invalid_argument("timer delay must be positive");
  if (crashed_.contains(owner)) return;
  const std::uint64_t gen = ++next_generation_;
  armed_[{owner, tag}] = gen;
  Event e;
  e.tick = now_ + after;
  e.kind = Event::Kind::timer;
  e.dst = owner;
  e.timer = tag;
  e.generation = gen;
  push(std::move(e));
}

void Simulator::cancel_timer(ProcessId owner, const TimerTag& tag) { armed_.erase({owner, tag}); }

bool Simulator::timer_armed(ProcessId owner, const TimerTag& tag) const {
  return armed_.contains({owner, tag});
}

Tick Simulator::sample_delay() {
  return std::uniform_int_distribution<Tick>(faults_.delay_min, faults_.delay_max)(net_rng_);
}

void Simulator::schedule_delivery(ProcessId src, ProcessId dst, const std::shared_ptr<const Message>& m,
                                  std::uint64_t id, Tick delay) {
  Event e;
  e.tick = now_ + delay;
  e.kind = Event::Kind::deliver;
  e.src = src;
  e.dst = dst;
  e.message = m;
  e.send_id = id;
  ++in_flight_;
  push(std::move(e));
}

void Simulator::route(ProcessId src, ProcessId dst, const std::shared_ptr<const Message>& m) {
  const std::uint64_t id = ++next_send_id_;
  const bool local = same_host(src, dst);
  record({now_, EventKind::send, id, src, dst, *m, {}, {}, local});
  auto mark = [&](EventKind k) { record({now_, k, id, src, dst, *m, {}, {}, local}); };

  if (!procs_.contains(dst)) {
    spdlog::warn("dropping {} to unknown process {}", tag_name(*m), to_string(dst));
    mark(EventKind::drop);
    return;
  }

  for (std::size_t i = 0; i < faults_.rules.size(); ++i) {
    const auto& rule = faults_.rules[i];
    if (!rule.matches(*m, src, dst, now_, local)) continue;
    if (rule.first_n && rule_hits_[i] >= *rule.first_n) continue;
    ++rule_hits_[i];
    switch (rule.action) {
      case ScriptedRule::Action::drop:
        mark(EventKind::drop);
        return;
      case ScriptedRule::Action::delay:
        schedule_delivery(src, dst, m, id, rule.delay);
        return;
      case ScriptedRule::Action::duplicate:
        mark(EventKind::dup);
        schedule_delivery(src, dst, m, id, sample_delay());
        schedule_delivery(src, dst, m, id, sample_delay());
        return;
    }
  }

  if (local && !faults_.intra_process) {
    local_.push({src, dst, m, id});
    return;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (faults_.drop > 0.0 && unit(net_rng_) < faults_.drop) {
    mark(EventKind::drop);
    return;
  }
  schedule_delivery(src, dst, m, id, sample_delay());
  if (faults_.dup > 0.0 && unit(net_rng_) < faults_.dup) {
    mark(EventKind::dup);
    schedule_delivery(src, dst, m, id, sample_delay());
  }
}

void Simulator::apply(ProcessId owner, Effects&& fx) {
  for (const auto& s : fx.sends) {
    auto m = std::make_shared<const Message>(s.message);
    for (const auto& dst : s.dests) route(owner, dst, m);
  }
  for (const auto& op : fx.timers) {
    if (op.is_cancel()) {
      cancel_timer(owner, op.tag);
    } else {
      arm_timer(owner, op.tag, op.after);
    }
  }
  for (auto& out : fx.outputs) {
    const EventKind k = std::holds_alternative<ChosenOutput>(out) ? EventKind::chosen : EventKind::apply;
    record({now_, k, 0, owner, owner, {}, {}, std::move(out), false});
  }
}

StepContext Simulator::context(ProcessId id) { return StepContext{now_, choosers_.at(id)}; }

void Simulator::deliver_now(ProcessId src, ProcessId dst, const Message& m, std::uint64_t id, bool local) {
  if (crashed_.contains(dst) || !started_.contains(dst)) {
    record({now_, EventKind::drop, id, src, dst, m, {}, {}, local});
    return;
  }
  record({now_, EventKind::deliver, id, src, dst, m, {}, {}, local});
  Process& p = *procs_.at(dst);
  StepContext ctx = context(dst);
  Effects fx = p.deliver(m, src, ctx);
  fx.merge(p.settle(ctx, opts_.max_firings));
  apply(dst, std::move(fx));
}

void Simulator::drain_local() {
  std::size_t cascade = 0;
  while (!local_.empty()) {
    if (++cascade > opts_.max_local_cascade) {
      throw SafetyViolation("local delivery cascade exceeded " + std::to_string(opts_.max_local_cascade));
    }
    LocalDelivery d = std::move(local_.front());
    local_.pop();
    deliver_now(d.src, d.dst, *d.message, d.send_id, true);
  }
}

void Simulator::dispatch(const Event& e) {
  switch (e.kind) {
    case Event::Kind::deliver:
      --in_flight_;
      deliver_now(e.src, e.dst, *e.message, e.send_id, false);
      break;
    case Event::Kind::timer: {
      auto it = armed_.find({e.dst, e.timer});
      if (it == armed_.end() || it->second != e.generation) return;
      armed_.erase(it);
      record({now_, EventKind::timer, 0, e.dst, e.dst, {}, e.timer, {}, false});
      Process& p = *procs_.at(e.dst);
      StepContext ctx = context(e.dst);
      Effects fx = p.on_timer(e.timer, ctx);
      fx.merge(p.settle(ctx, opts_.max_firings));
      apply(e.dst, std::move(fx));
      break;
    }
    case Event::Kind::start: {
      if (crashed_.contains(e.dst)) return;
      started_.insert(e.dst);
      record({now_, EventKind::start, 0, e.dst, e.dst, {}, {}, {}, false});
      Process& p = *procs_.at(e.dst);
      StepContext ctx = context(e.dst);
      Effects fx = p.start(ctx);
      fx.merge(p.settle(ctx, opts_.max_firings));
      apply(e.dst, std::move(fx));
      break;
    }
    case Event::Kind::crash:
      if (!crashed_.insert(e.dst).second) return;
      record({now_, EventKind::crash, 0, e.dst, e.dst, {}, {}, {}, false});
      std::erase_if(armed_, [&](const auto& kv) { return kv.first.first == e.dst; });
      break;
  }
  drain_local();
}

void Simulator::finish(EndStatus::Reason reason, std::string diagnostic) {
  if (reason == EndStatus::Reason::tick_bound && armed_.empty() && in_flight_ == 0) {
    reason = EndStatus::Reason::quiescent;
  }
  trace_.end = EndStatus{reason, now_, armed_.size(), in_flight_, std::move(diagnostic)};
}

const RunTrace& Simulator::run_until(const StopFn& stop, Tick max_ticks) {
  if (!starts_scheduled_) {
    starts_scheduled_ = true;
    for (const auto& [id, t] : start_ticks_) {
      Event e;
      e.tick = t;
      e.kind = Event::Kind::start;
      e.dst = id;
      push(std::move(e));
    }
  }
  halted_ = false;
  while (!queue_.empty()) {
    if (stop && stop(*this)) {
      finish(EndStatus::Reason::stopped);
      return trace_;
    }
    if (queue_.top().tick > max_ticks) {
      now_ = std::max(now_, max_ticks);
      finish(EndStatus::Reason::tick_bound);
      return trace_;
    }
    Event e = queue_.top();
    queue_.pop();
    now_ = e.tick;
    try {
      dispatch(e);
    } catch (const SafetyViolation& ex) {
      spdlog::error("run aborted at tick {}: {}", now_, ex.what());
      local_ = {};
      finish(EndStatus::Reason::aborted, ex.what());
      return trace_;
    }
    if (halted_) {
      finish(EndStatus::Reason::stopped, "halted by observer");
      return trace_;
    }
  }
  finish(stop && stop(*this) ? EndStatus::Reason::stopped : EndStatus::Reason::quiescent);
  return trace_;
}

}  // namespace paxsim
