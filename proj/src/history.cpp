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

#include "paxsim/history.hpp"

#include <spdlog/spdlog.h>

#include "paxsim/json_codec.hpp"

namespace paxsim {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::optional<Ballot> ballot_field(const Message& m) {
  return std::visit(
      Overloaded{[](const BasicPrepare& x) -> std::optional<Ballot> { return x.n; },
                 [](const BasicRespond& x) -> std::optional<Ballot> { return x.n; },
                 [](const BasicAccept& x) -> std::optional<Ballot> { return x.n; },
                 [](const BasicAccepted& x) -> std::optional<Ballot> { return x.n; },
                 [](const M1a& x) -> std::optional<Ballot> { return x.b; },
                 [](const M1b& x) -> std::optional<Ballot> { return x.b; },
                 [](const M2a& x) -> std::optional<Ballot> { return x.b; },
                 [](const M2b& x) -> std::optional<Ballot> { return x.b; },
                 [](const Preempt& x) -> std::optional<Ballot> { return x.b; },
                 [](const auto&) -> std::optional<Ballot> { return std::nullopt; }},
      m);
}

std::optional<Command> command_field(const Message& m) {
  return std::visit(Overloaded{[](const Request& x) -> std::optional<Command> { return x.c; },
                               [](const Propose& x) -> std::optional<Command> { return x.c; },
                               [](const Decision& x) -> std::optional<Command> { return x.c; },
                               [](const M2a& x) -> std::optional<Command> { return x.c; },
                               [](const M2b& x) -> std::optional<Command> { return x.c; },
                               [](const auto&) -> std::optional<Command> { return std::nullopt; }},
                    m);
}

std::optional<Value> value_field(const Message& m) {
  return std::visit(Overloaded{[](const BasicAccept& x) -> std::optional<Value> { return x.v; },
                               [](const BasicAccepted& x) -> std::optional<Value> { return x.v; },
                               [](const auto&) -> std::optional<Value> { return std::nullopt; }},
                    m);
}

std::optional<std::int64_t> round_field(const Message& m) {
  return std::visit(
      Overloaded{[](const Ping& x) -> std::optional<std::int64_t> { return x.r; },
                 [](const Pong& x) -> std::optional<std::int64_t> { return x.r; },
                 [](const auto&) -> std::optional<std::int64_t> { return std::nullopt; }},
      m);
}

std::optional<std::int64_t> timestamp_field(const Message& m) {
  return std::visit(
      Overloaded{[](const Ping& x) -> std::optional<std::int64_t> { return x.t; },
                 [](const Pong& x) -> std::optional<std::int64_t> { return x.t; },
                 [](const auto&) -> std::optional<std::int64_t> { return std::nullopt; }},
      m);
}

}  // namespace

std::optional<Slot> slot_of(const Message& m) {
  return std::visit(Overloaded{[](const Propose& x) -> std::optional<Slot> { return x.s; },
                               [](const Decision& x) -> std::optional<Slot> { return x.s; },
                               [](const M2a& x) -> std::optional<Slot> { return x.s; },
                               [](const M2b& x) -> std::optional<Slot> { return x.s; },
                               [](const auto&) -> std::optional<Slot> { return std::nullopt; }},
                    m);
}

void MessageHistory::Side::append(const Message& m, ProcessId peer) {
  const auto pos = static_cast<std::uint32_t>(entries.size());
  entries.push_back({m, peer});
  by_tag[m.index()].push_back(pos);
  if (auto s = slot_of(m)) by_slot[m.index()][*s].push_back(pos);
}

void MessageHistory::record_sent(const Message& m, std::span<const ProcessId> dests) {
  if (dests.empty()) {
    spdlog::warn("send of '{}' to an empty destination set", tag_name(m));
    return;
  }
  for (const auto& d : dests) sent_.append(m, d);
}

void MessageHistory::record_sent(const Message& m, const ProcessSet& dests) {
  if (dests.empty()) {
    spdlog::warn("send of '{}' to an empty destination set", tag_name(m));
    return;
  }
  for (const auto& d : dests) sent_.append(m, d);
}

void MessageHistory::record_sent(const Message& m, ProcessId dest) { sent_.append(m, dest); }

void MessageHistory::record_received(const Message& m, ProcessId sender) {
  received_.append(m, sender);
}

bool matches(const MessagePattern& p, const HistoryEntry& e) {
  if (e.message.index() != p.tag) return false;
  if (p.peer && e.peer != *p.peer) return false;
  if (p.ballot && ballot_field(e.message) != p.ballot) return false;
  if (p.slot && slot_of(e.message) != p.slot) return false;
  if (p.command && command_field(e.message) != p.command) return false;
  if (p.value && value_field(e.message) != p.value) return false;
  return true;
}

std::optional<FieldValue> project(Field f, const HistoryEntry& e) {
  switch (f) {
    case Field::peer:
      return e.peer;
    case Field::ballot:
      if (auto b = ballot_field(e.message)) return *b;
      return std::nullopt;
    case Field::slot:
      if (auto s = slot_of(e.message)) return *s;
      return std::nullopt;
    case Field::command:
      if (auto c = command_field(e.message)) return *c;
      return std::nullopt;
    case Field::value:
      if (auto v = value_field(e.message)) return Slot{*v};
      return std::nullopt;
    case Field::round:
      if (auto r = round_field(e.message)) return Slot{*r};
      return std::nullopt;
    case Field::timestamp:
      if (auto t = timestamp_field(e.message)) return Slot{*t};
      return std::nullopt;
  }
  return std::nullopt;
}

QueryResult query(const MessageHistory& h, QueryKind kind, const MessagePattern& p) {
  QueryResult r;
  const auto& entries = h.entries(p.direction);
  switch (kind) {
    case QueryKind::exists:
      for (const auto& e : entries) {
        if (matches(p, e)) {
          r.holds = true;
          r.witness = e;
          break;
        }
      }
      break;
    case QueryKind::forall:
      r.holds = true;
      for (const auto& e : entries) {
        if (!matches(p, e)) continue;
        if (p.ballot_below) {
          auto b = ballot_field(e.message);
          if (!b || !(*b < *p.ballot_below)) {
            r.holds = false;
            break;
          }
        }
      }
      break;
    case QueryKind::count:
    case QueryKind::select:
    case QueryKind::max:
      for (const auto& e : entries) {
        if (!matches(p, e)) continue;
        if (auto v = project(p.project, e)) r.selected.insert(*v);
      }
      r.count = r.selected.size();
      if (!r.selected.empty()) r.max = *r.selected.rbegin();
      r.holds = !r.selected.empty();
      break;
  }
  return r;
}

std::string dump_jsonl(const MessageHistory& h) {
  std::string out;
  for (auto dir : {Direction::sent, Direction::received}) {
    for (const auto& e : h.entries(dir)) {
      nlohmann::json j = {{"dir", dir == Direction::sent ? "sent" : "received"},
                          {"peer", e.peer},
                          {"message", message_to_json(e.message)}};
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

}  // namespace paxsim
