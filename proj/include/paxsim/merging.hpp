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

// Co-locating Acceptor and Replica roles inside a Leader.
//
// Two levels live here. Process-type descriptors model the merge rules on the
// shape of each role's specification (its run body and handler set), so the
// rules can be applied, rejected and inverted symbolically. Topologies map the
// same rules onto a concrete deployment: which role instances share a host.
// The simulator and the socket transport deliver messages between roles of one
// host in memory, with each role keeping its own history.

#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "paxsim/types.hpp"
#include "paxsim/variants.hpp"

namespace paxsim {

/// Shape of a role's run body.
enum class RunBody {
  main_flow,      // its own control loop with sends and awaits
  idle,           // `await false`
  guarded_loop,   // `while true: await` over guarded branches
};

/// A handler in a merged type, tagged with the role it came from.
struct Handler {
  Role origin = Role::leader;
  std::string name;
  /// Position of the guarded-loop branch this handler was converted from;
  /// -1 for ordinary receive handlers.
  int branch = -1;

  friend auto operator<=>(const Handler&, const Handler&) = default;
};

struct ProcessType {
  std::set<Role> roles;
  RunBody run = RunBody::main_flow;
  /// Guarded branches of the run body (guarded_loop only).
  std::vector<std::string> branches;
  /// Timer-driven branches, tagged with their role.
  std::set<Handler> timeouts;
  std::set<Handler> handlers;
  /// Role contributing the control flow; Leader when present.
  std::optional<Role> main_role;

  std::string name() const;
  friend bool operator==(const ProcessType&, const ProcessType&) = default;
};

/// Descriptor of one unmerged role under cfg (timers appear with their fixes).
ProcessType process_type(Role role, const VariantConfig& cfg = {});

/// Rule 1: a guest whose run is idle contributes only its receive handlers.
/// Throws ConfigError when the guest's run is not idle.
ProcessType merge_await_false(const ProcessType& host, const ProcessType& guest);

/// Rule 2: each guarded branch of the guest becomes a receive handler that
/// re-checks its condition. Throws ConfigError when the guest's run is not a
/// guarded loop, or when it has timeouts and `allow_timers` is false. With
/// `allow_timers` the guest's timers move to the merged type.
ProcessType merge_while_await(const ProcessType& host, const ProcessType& guest,
                              bool allow_timers = false);

/// Applies the applicable rule for each guest in turn.
ProcessType merge_into(const ProcessType& host, const std::vector<ProcessType>& guests,
                       bool allow_timers = true);

/// Recovers the per-role descriptors of a merged type.
std::vector<ProcessType> split(const ProcessType& merged);

/// Co-location groups: each group lists roles whose i-th instances share a host.
using Topology = std::vector<std::vector<Role>>;

/// The unmerged deployment plus L+A, L+R and L+A+R.
std::vector<Topology> merged_configurations();
std::string topology_name(const Topology& t);
/// Inverse of topology_name ("unmerged", "L+A", "L+R", "L+A+R").
Topology parse_topology_name(const std::string& name);

/// Rejects unknown roles, roles listed twice, and multi-role groups without
/// a leader or containing roles other than leader, acceptor and replica.
void validate_topology(const Topology& t);

/// Host groups for the given instance counts. Roles not in any group, and
/// instances whose index exceeds a partner's count, get a host of their own.
std::vector<std::vector<ProcessId>> host_groups(const Topology& t,
                                                const std::vector<ProcessId>& processes);

}  // namespace paxsim
