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

#include <array>
#include <stdexcept>

#include "paxsim/json_codec.hpp"
#include "paxsim/message.hpp"

namespace paxsim {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kMessageKinds> kTagNames = {
    "prepare", "respond", "accept", "accepted", "request", "response", "propose", "decision",
    "1a",      "1b",      "2a",     "2b",       "preempt", "ping",     "pong"};

json fields_of(const BasicPrepare& m) { return {{"n", m.n}}; }
json fields_of(const BasicRespond& m) {
  json j = {{"n", m.n}, {"max_prop", nullptr}};
  if (m.max_prop) j["max_prop"] = {{"n", m.max_prop->n}, {"v", m.max_prop->v}};
  return j;
}
json fields_of(const BasicAccept& m) { return {{"n", m.n}, {"v", m.v}}; }
json fields_of(const BasicAccepted& m) { return {{"n", m.n}, {"v", m.v}}; }
json fields_of(const Request& m) { return {{"c", m.c}}; }
json fields_of(const Response& m) { return {{"cmd_id", m.cmd_id}, {"result", m.result}}; }
json fields_of(const Propose& m) { return {{"s", m.s}, {"c", m.c}}; }
json fields_of(const Decision& m) { return {{"s", m.s}, {"c", m.c}}; }
json fields_of(const M1a& m) { return {{"b", m.b}}; }
json fields_of(const M1b& m) { return {{"b", m.b}, {"accepted", m.accepted}}; }
json fields_of(const M2a& m) { return {{"b", m.b}, {"s", m.s}, {"c", m.c}}; }
json fields_of(const M2b& m) { return {{"b", m.b}, {"s", m.s}, {"c", m.c}}; }
json fields_of(const Preempt& m) { return {{"b", m.b}}; }
json fields_of(const Ping& m) { return {{"r", m.r}, {"t", m.t}}; }
json fields_of(const Pong& m) { return {{"r", m.r}, {"t", m.t}}; }

Message build(std::size_t tag, const json& f) {
  switch (tag) {
    case tag_of<BasicPrepare>():
      return BasicPrepare{f.at("n").get<Ballot>()};
    case tag_of<BasicRespond>(): {
      BasicRespond m{f.at("n").get<Ballot>(), std::nullopt};
      const auto& mp = f.at("max_prop");
      if (!mp.is_null()) m.max_prop = AcceptedProposal{mp.at("n").get<Ballot>(), mp.at("v").get<Value>()};
      return m;
    }
    case tag_of<BasicAccept>():
      return BasicAccept{f.at("n").get<Ballot>(), f.at("v").get<Value>()};
    case tag_of<BasicAccepted>():
      return BasicAccepted{f.at("n").get<Ballot>(), f.at("v").get<Value>()};
    case tag_of<Request>():
      return Request{f.at("c").get<Command>()};
    case tag_of<Response>():
      return Response{f.at("cmd_id").get<std::int64_t>(), f.at("result").get<std::string>()};
    case tag_of<Propose>():
      return Propose{f.at("s").get<Slot>(), f.at("c").get<Command>()};
    case tag_of<Decision>():
      return Decision{f.at("s").get<Slot>(), f.at("c").get<Command>()};
    case tag_of<M1a>():
      return M1a{f.at("b").get<Ballot>()};
    case tag_of<M1b>():
      return M1b{f.at("b").get<Ballot>(), f.at("accepted").get<std::vector<PValue>>()};
    case tag_of<M2a>():
      return M2a{f.at("b").get<Ballot>(), f.at("s").get<Slot>(), f.at("c").get<Command>()};
    case tag_of<M2b>():
      return M2b{f.at("b").get<Ballot>(), f.at("s").get<Slot>(), f.at("c").get<Command>()};
    case tag_of<Preempt>():
      return Preempt{f.at("b").get<Ballot>()};
    case tag_of<Ping>():
      return Ping{f.at("r").get<std::int64_t>(), f.at("t").get<std::int64_t>()};
    case tag_of<Pong>():
      return Pong{f.at("r").get<std::int64_t>(), f.at("t").get<std::int64_t>()};
    default:
      throw std::invalid_argument("unknown message tag index");
  }
}

}  // namespace

void to_json(json& j, const ProcessId& id) { j = json::array({role_name(id.role), id.index}); }

void from_json(const json& j, ProcessId& id) {
  id.role = parse_role(j.at(0).get<std::string>());
  id.index = j.at(1).get<std::int64_t>();
}

void to_json(json& j, const Ballot& b) { j = json::array({b.round, b.leader}); }

void from_json(const json& j, Ballot& b) {
  b.round = j.at(0).get<std::int64_t>();
  b.leader = j.at(1).get<ProcessId>();
}

void to_json(json& j, const Operation& op) {
  if (const auto* app = std::get_if<AppOp>(&op)) {
    j = {{"kind", "app_op"}, {"payload", app->payload}};
  } else {
    j = {{"kind", "reconfig"}, {"leaders", std::get<ReconfigOp>(op).leaders}};
  }
}

void from_json(const json& j, Operation& op) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "app_op") {
    op = AppOp{j.at("payload").get<std::string>()};
  } else if (kind == "reconfig") {
    op = make_reconfig(j.at("leaders").get<ProcessSet>());
  } else {
    throw std::invalid_argument("unknown operation kind '" + kind + "'");
  }
}

void to_json(json& j, const Command& c) {
  j = {{"client", c.client}, {"cmd_id", c.cmd_id}, {"op", c.op}};
}

void from_json(const json& j, Command& c) {
  c.client = j.at("client").get<ProcessId>();
  c.cmd_id = j.at("cmd_id").get<std::int64_t>();
  c.op = j.at("op").get<Operation>();
}

void to_json(json& j, const PValue& p) { j = json::array({p.ballot, p.slot, p.command}); }

void from_json(const json& j, PValue& p) {
  p.ballot = j.at(0).get<Ballot>();
  p.slot = j.at(1).get<Slot>();
  p.command = j.at(2).get<Command>();
}

std::string_view tag_name(std::size_t tag_index) { return kTagNames.at(tag_index); }

std::string_view tag_name(const Message& m) { return tag_name(m.index()); }

std::optional<std::size_t> parse_tag(std::string_view name) {
  for (std::size_t i = 0; i < kTagNames.size(); ++i) {
    if (kTagNames[i] == name) return i;
  }
  return std::nullopt;
}

json message_to_json(const Message& m) {
  return {{"tag", tag_name(m)}, {"fields", std::visit([](const auto& x) { return fields_of(x); }, m)}};
}

Message message_from_json(const json& j) {
  const auto tag = parse_tag(j.at("tag").get<std::string>());
  if (!tag) throw std::invalid_argument("unknown message tag '" + j.at("tag").dump() + "'");
  return build(*tag, j.at("fields"));
}

std::string encode(const Message& m) {
  try {
    return message_to_json(m).dump();
  } catch (const json::type_error& e) {
    throw std::invalid_argument(std::string("unencodable message: ") + e.what());
  }
}

Message decode(std::string_view line) {
  try {
    return message_from_json(json::parse(line));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed message: ") + e.what());
  } catch (const ConfigError& e) {
    throw std::invalid_argument(std::string("malformed message: ") + e.what());
  }
}

}  // namespace paxsim
