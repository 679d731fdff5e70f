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

#include "paxsim/types.hpp"

#include <array>
#include <charconv>

namespace paxsim {

namespace {

constexpr std::array<std::string_view, 7> kRoleNames = {
    "proposer", "acceptor", "learner", "replica", "leader", "client", "merged"};

constexpr std::array<char, 7> kRoleLetters = {'P', 'A', 'N', 'R', 'L', 'C', 'M'};

}  // namespace

std::string_view role_name(Role role) { return kRoleNames.at(static_cast<std::size_t>(role)); }

Role parse_role(std::string_view name) {
  for (std::size_t i = 0; i < kRoleNames.size(); ++i) {
    if (kRoleNames[i] == name) return static_cast<Role>(i);
  }
  throw ConfigError("unknown role '" + std::string(name) + "'");
}

std::string to_string(const ProcessId& id) {
  return kRoleLetters.at(static_cast<std::size_t>(id.role)) + std::to_string(id.index);
}

ProcessId parse_process_id(std::string_view text) {
  if (text.size() >= 2) {
    for (std::size_t i = 0; i < kRoleLetters.size(); ++i) {
      if (kRoleLetters[i] != text[0]) continue;
      std::int64_t index = 0;
      const auto* end = text.data() + text.size();
      auto [ptr, ec] = std::from_chars(text.data() + 1, end, index);
      if (ec == std::errc() && ptr == end) return {static_cast<Role>(i), index};
    }
  }
  throw ConfigError("invalid process id '" + std::string(text) + "'");
}

std::string to_string(const Ballot& b) {
  return "(" + std::to_string(b.round) + "," + to_string(b.leader) + ")";
}

std::string to_string(const Command& c) {
  std::string out = to_string(c.client) + "#" + std::to_string(c.cmd_id) + ":";
  if (const auto* app = std::get_if<AppOp>(&c.op)) {
    out += app->payload;
  } else {
    out += "reconfig{";
    bool first = true;
    for (const auto& l : std::get<ReconfigOp>(c.op).leaders) {
      if (!first) out += ",";
      out += to_string(l);
      first = false;
    }
    out += "}";
  }
  return out;
}

Operation make_reconfig(ProcessSet leaders) {
  if (leaders.empty()) throw ConfigError("reconfiguration needs a non-empty leader set");
  for (const auto& l : leaders) {
    if (l.role != Role::leader) {
      throw ConfigError("reconfiguration member " + to_string(l) + " is not a leader");
    }
  }
  return ReconfigOp{std::move(leaders)};
}

std::int64_t quorum_size(std::int64_t n_acceptors) {
  if (n_acceptors <= 0) throw ConfigError("quorum needs at least one acceptor");
  return n_acceptors / 2 + 1;
}

}  // namespace paxsim
