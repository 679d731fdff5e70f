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

#pragma once

#include <compare>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace paxsim {

/// Raised for invalid scenario, topology or command construction.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a run observes a state the protocol must never reach.
class SafetyViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Declaration order is the rank used by the ProcessId order.
enum class Role : std::uint8_t {
  proposer,
  acceptor,
  learner,
  replica,
  leader,
  client,
  merged,
};

std::string_view role_name(Role role);
Role parse_role(std::string_view name);

struct ProcessId {
  Role role = Role::proposer;
  std::int64_t index = 0;

  friend auto operator<=>(const ProcessId&, const ProcessId&) = default;
};

/// Short form used in logs and tables, e.g. "L1", "A3".
std::string to_string(const ProcessId& id);
/// Inverse of to_string: "L1" -> {leader, 1}. Throws ConfigError.
ProcessId parse_process_id(std::string_view text);

using ProcessSet = std::set<ProcessId>;

/// Proposal number of both algorithms: (round, leader), ordered lexicographically.
struct Ballot {
  std::int64_t round = 0;
  ProcessId leader;

  /// Smaller than every ballot a proposer or leader can produce.
  static Ballot bottom() { return Ballot{0, ProcessId{Role::proposer, -1}}; }

  friend auto operator<=>(const Ballot&, const Ballot&) = default;
};

inline bool ballot_less(const Ballot& a, const Ballot& b) { return a < b; }

std::string to_string(const Ballot& b);

/// 1-based position in the replicated command sequence.
using Slot = std::int64_t;
inline constexpr Slot kFirstSlot = 1;

/// Basic Paxos proposal value.
using Value = std::int64_t;

struct AppOp {
  std::string payload;
  friend auto operator<=>(const AppOp&, const AppOp&) = default;
};

struct ReconfigOp {
  ProcessSet leaders;
  friend auto operator<=>(const ReconfigOp&, const ReconfigOp&) = default;
};

using Operation = std::variant<AppOp, ReconfigOp>;

inline bool is_reconfig(const Operation& op) {
  return std::holds_alternative<ReconfigOp>(op);
}

/// Validated reconfiguration; throws ConfigError on an empty or non-leader set.
Operation make_reconfig(ProcessSet leaders);

struct Command {
  ProcessId client;
  std::int64_t cmd_id = 0;
  Operation op;

  friend auto operator<=>(const Command&, const Command&) = default;
};

std::string to_string(const Command& c);

struct PValue {
  Ballot ballot;
  Slot slot = kFirstSlot;
  Command command;

  friend auto operator<=>(const PValue&, const PValue&) = default;
};

/// Smallest k with k > n/2. Throws ConfigError for n == 0.
std::int64_t quorum_size(std::int64_t n_acceptors);

}  // namespace paxsim
