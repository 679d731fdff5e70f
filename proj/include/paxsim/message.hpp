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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "paxsim/types.hpp"

namespace paxsim {

// Basic Paxos wire messages.

struct BasicPrepare {
  Ballot n;
  friend auto operator<=>(const BasicPrepare&, const BasicPrepare&) = default;
};

struct AcceptedProposal {
  Ballot n;
  Value v = 0;
  friend auto operator<=>(const AcceptedProposal&, const AcceptedProposal&) = default;
};

struct BasicRespond {
  Ballot n;
  std::optional<AcceptedProposal> max_prop;
  friend auto operator<=>(const BasicRespond&, const BasicRespond&) = default;
};

struct BasicAccept {
  Ballot n;
  Value v = 0;
  friend auto operator<=>(const BasicAccept&, const BasicAccept&) = default;
};

struct BasicAccepted {
  Ballot n;
  Value v = 0;
  friend auto operator<=>(const BasicAccepted&, const BasicAccepted&) = default;
};

// Multi-Paxos wire messages.

struct Request {
  Command c;
  friend auto operator<=>(const Request&, const Request&) = default;
};

struct Response {
  std::int64_t cmd_id = 0;
  std::string result;
  friend auto operator<=>(const Response&, const Response&) = default;
};

struct Propose {
  Slot s = kFirstSlot;
  Command c;
  friend auto operator<=>(const Propose&, const Propose&) = default;
};

struct Decision {
  Slot s = kFirstSlot;
  Command c;
  friend auto operator<=>(const Decision&, const Decision&) = default;
};

struct M1a {
  Ballot b;
  friend auto operator<=>(const M1a&, const M1a&) = default;
};

struct M1b {
  Ballot b;
  // Sorted and duplicate-free.
  std::vector<PValue> accepted;
  friend auto operator<=>(const M1b&, const M1b&) = default;
};

struct M2a {
  Ballot b;
  Slot s = kFirstSlot;
  Command c;
  friend auto operator<=>(const M2a&, const M2a&) = default;
};

struct M2b {
  Ballot b;
  Slot s = kFirstSlot;
  Command c;
  friend auto operator<=>(const M2b&, const M2b&) = default;
};

struct Preempt {
  Ballot b;
  friend auto operator<=>(const Preempt&, const Preempt&) = default;
};

struct Ping {
  std::int64_t r = 0;
  std::int64_t t = 0;
  friend auto operator<=>(const Ping&, const Ping&) = default;
};

struct Pong {
  std::int64_t r = 0;
  std::int64_t t = 0;
  friend auto operator<=>(const Pong&, const Pong&) = default;
};

using Message = std::variant<BasicPrepare, BasicRespond, BasicAccept, BasicAccepted, Request,
                             Response, Propose, Decision, M1a, M1b, M2a, M2b, Preempt, Ping,
                             Pong>;

inline constexpr std::size_t kMessageKinds = std::variant_size_v<Message>;

/// Wire tag, e.g. "prepare", "1b", "decision".
std::string_view tag_name(const Message& m);
std::string_view tag_name(std::size_t tag_index);
std::optional<std::size_t> parse_tag(std::string_view name);

/// Index of the alternative T within Message.
template <class T, std::size_t I = 0>
constexpr std::size_t tag_of() {
  if constexpr (I >= kMessageKinds) {
    static_assert(I < kMessageKinds, "type is not a Message alternative");
    return I;
  } else if constexpr (std::is_same_v<std::variant_alternative_t<I, Message>, T>) {
    return I;
  } else {
    return tag_of<T, I + 1>();
  }
}

/// Single-line canonical JSON: {"tag": ..., "fields": {...}}. Strings must be
/// valid UTF-8; throws std::invalid_argument otherwise.
std::string encode(const Message& m);

/// Throws std::invalid_argument on malformed input.
Message decode(std::string_view line);

}  // namespace paxsim
