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

#include "paxsim/merging.hpp"

#include <algorithm>
#include <map>

namespace paxsim {

namespace {

char role_letter(Role r) { return to_string(ProcessId{r, 0}).front(); }

void require_disjoint(const ProcessType& host, const ProcessType& guest) {
  for (Role r : guest.roles) {
    if (host.roles.contains(r)) throw ConfigError("role merged twice: " + std::string(role_name(r)));
  }
  if (host.run != RunBody::main_flow) throw ConfigError("merge host needs its own control flow");
}

ProcessType combine(const ProcessType& host, const ProcessType& guest) {
  ProcessType out = host;
  out.roles.insert(guest.roles.begin(), guest.roles.end());
  out.handlers.insert(guest.handlers.begin(), guest.handlers.end());
  return out;
}

}  // namespace

std::string ProcessType::name() const {
  std::vector<Role> order(roles.begin(), roles.end());
  // Leader first, then the rest in role order.
  std::stable_partition(order.begin(), order.end(), [](Role r) { return r == Role::leader; });
  std::string out;
  for (Role r : order) {
    if (!out.empty()) out += '+';
    out += role_name(r);
  }
  return out;
}

ProcessType process_type(Role role, const VariantConfig& cfg) {
  ProcessType t;
  t.roles = {role};
  switch (role) {
    case Role::leader:
      t.main_role = role;
      if (cfg.failure_detection) {
        t.handlers.insert({role, "ping"});
        t.timeouts.insert({role, "ping"});
      }
      if (cfg.fix_replica_repropose) t.handlers.insert({role, "propose-decided"});
      if (cfg.fix_leader_phase1_timeout) t.timeouts.insert({role, "phase1"});
      if (cfg.fix_leader_resend_2a) t.timeouts.insert({role, "resend-2a"});
      if (cfg.fix_leader_phase2_timeout) t.timeouts.insert({role, "progress"});
      break;
    case Role::acceptor:
      t.run = RunBody::idle;
      t.handlers = {{role, "1a"}, {role, "2a"}, {role, "preempt"}};
      break;
    case Role::replica:
      t.run = RunBody::guarded_loop;
      t.main_role = role;
      t.branches = {"propose", "apply"};
      if (cfg.fix_replica_repropose) t.timeouts.insert({role, "repropose"});
      break;
    case Role::proposer:
    case Role::learner:
    case Role::client:
      t.main_role = role;
      break;
    case Role::merged:
      throw ConfigError("no descriptor for the merged role");
  }
  return t;
}

ProcessType merge_await_false(const ProcessType& host, const ProcessType& guest) {
  if (guest.run != RunBody::idle) {
    throw ConfigError(guest.name() + " cannot merge by rule 1: its run body is not idle");
  }
  require_disjoint(host, guest);
  ProcessType out = combine(host, guest);
  out.timeouts.insert(guest.timeouts.begin(), guest.timeouts.end());
  return out;
}

ProcessType merge_while_await(const ProcessType& host, const ProcessType& guest, bool allow_timers) {
  if (guest.run != RunBody::guarded_loop) {
    throw ConfigError(guest.name() + " cannot merge by rule 2: its run body is not a guarded loop");
  }
  if (!guest.timeouts.empty() && !allow_timers) {
    throw ConfigError(guest.name() + " cannot merge by rule 2: its loop has timeouts");
  }
  require_disjoint(host, guest);
  ProcessType out = combine(host, guest);
  const Role origin = *guest.main_role;
  for (std::size_t i = 0; i < guest.branches.size(); ++i) {
    out.handlers.insert({origin, guest.branches[i], static_cast<int>(i)});
  }
  out.timeouts.insert(guest.timeouts.begin(), guest.timeouts.end());
  return out;
}

ProcessType merge_into(const ProcessType& host, const std::vector<ProcessType>& guests,
                       bool allow_timers) {
  ProcessType out = host;
  for (const auto& g : guests) {
    out = g.run == RunBody::idle ? merge_await_false(out, g) : merge_while_await(out, g, allow_timers);
  }
  return out;
}

std::vector<ProcessType> split(const ProcessType& merged) {
  std::map<Role, ProcessType> parts;
  for (Role r : merged.roles) {
    ProcessType& p = parts[r];
    p.roles = {r};
    if (merged.main_role == r) {
      p.run = merged.run;
      p.branches = merged.branches;
      p.main_role = r;
    } else {
      p.run = RunBody::idle;
    }
  }
  std::map<Role, std::vector<std::pair<int, std::string>>> branches;
  for (const auto& h : merged.handlers) {
    if (h.branch >= 0) {
      branches[h.origin].emplace_back(h.branch, h.name);
    } else {
      parts.at(h.origin).handlers.insert(h);
    }
  }
  for (auto& [role, list] : branches) {
    std::sort(list.begin(), list.end());
    ProcessType& p = parts.at(role);
    p.run = RunBody::guarded_loop;
    p.main_role = role;
    for (auto& [i, name] : list) p.branches.push_back(name);
  }
  for (const auto& t : merged.timeouts) parts.at(t.origin).timeouts.insert(t);

  std::vector<ProcessType> out;
  for (auto& [role, p] : parts) out.push_back(std::move(p));
  return out;
}

std::vector<Topology> merged_configurations() {
  return {
      {},
      {{Role::leader, Role::acceptor}},
      {{Role::leader, Role::replica}},
      {{Role::leader, Role::acceptor, Role::replica}},
  };
}

std::string topology_name(const Topology& t) {
  std::string out;
  for (const auto& group : t) {
    if (group.size() < 2) continue;
    std::vector<Role> order = group;
    std::stable_partition(order.begin(), order.end(), [](Role r) { return r == Role::leader; });
    if (!out.empty()) out += ",";
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i > 0) out += '+';
      out += role_letter(order[i]);
    }
  }
  return out.empty() ? "unmerged" : out;
}

Topology parse_topology_name(const std::string& name) {
  for (const auto& t : merged_configurations()) {
    if (topology_name(t) == name) return t;
  }
  throw ConfigError("unknown merged configuration '" + name + "'");
}

void validate_topology(const Topology& t) {
  std::set<Role> seen;
  for (const auto& group : t) {
    if (group.empty()) throw ConfigError("empty co-location group");
    for (Role r : group) {
      if (!seen.insert(r).second) {
        throw ConfigError("role listed in two co-location groups: " + std::string(role_name(r)));
      }
      if (group.size() > 1 && r != Role::leader && r != Role::acceptor && r != Role::replica) {
        throw ConfigError("only acceptor and replica can be merged into leader, not " +
                          std::string(role_name(r)));
      }
    }
    if (group.size() > 1 && std::find(group.begin(), group.end(), Role::leader) == group.end()) {
      throw ConfigError("a co-location group needs a leader as host");
    }
  }
}

std::vector<std::vector<ProcessId>> host_groups(const Topology& t,
                                                const std::vector<ProcessId>& processes) {
  validate_topology(t);
  std::map<Role, std::size_t> group_of;
  for (std::size_t g = 0; g < t.size(); ++g) {
    for (Role r : t[g]) group_of[r] = g;
  }
  std::map<std::pair<std::size_t, std::int64_t>, std::vector<ProcessId>> merged;
  std::vector<std::vector<ProcessId>> out;
  for (const auto& p : processes) {
    auto it = group_of.find(p.role);
    if (it == group_of.end() || t[it->second].size() < 2) {
      out.push_back({p});
    } else {
      merged[{it->second, p.index}].push_back(p);
    }
  }
  for (auto& [key, members] : merged) {
    std::sort(members.begin(), members.end(), [](const ProcessId& a, const ProcessId& b) {
      if ((a.role == Role::leader) != (b.role == Role::leader)) return a.role == Role::leader;
      return a < b;
    });
    out.push_back(std::move(members));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace paxsim
