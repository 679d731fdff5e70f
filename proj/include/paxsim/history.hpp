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

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "paxsim/message.hpp"
#include "paxsim/types.hpp"

namespace paxsim {

enum class Direction : std::uint8_t { sent, received };

/// One record: the message and the peer (destination for sent, sender for received).
struct HistoryEntry {
  Message message;
  ProcessId peer;
};

/// Read-only view over the entries of one direction that carry message type T.
/// Iteration yields (const T&, ProcessId peer) pairs in arrival order.
template <class T>
class TagView {
 public:
  TagView(const std::vector<HistoryEntry>& entries, const std::vector<std::uint32_t>& positions)
      : entries_(&entries), positions_(&positions) {}

  class iterator {
   public:
    using value_type = std::pair<const T&, ProcessId>;
    iterator(const TagView* view, std::size_t i) : view_(view), i_(i) {}
    value_type operator*() const {
      const auto& e = (*view_->entries_)[(*view_->positions_)[i_]];
      return {std::get<T>(e.message), e.peer};
    }
    iterator& operator++() {
      ++i_;
      return *this;
    }
    bool operator==(const iterator& o) const { return i_ == o.i_; }

   private:
    const TagView* view_;
    std::size_t i_;
  };

  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, positions_->size()}; }
  std::size_t size() const { return positions_->size(); }
  bool empty() const { return positions_->empty(); }

 private:
  const std::vector<HistoryEntry>* entries_;
  const std::vector<std::uint32_t>* positions_;
};

/// Append-only sent/received records of one process. Entries are indexed by
/// message tag and, for slot-carrying messages, by (tag, slot). The indexes are
/// derived data; entries() is the ground truth.
class MessageHistory {
 public:
  /// Appends one entry per destination. An empty destination set records nothing.
  void record_sent(const Message& m, std::span<const ProcessId> dests);
  void record_sent(const Message& m, const ProcessSet& dests);
  void record_sent(const Message& m, ProcessId dest);
  void record_received(const Message& m, ProcessId sender);

  const std::vector<HistoryEntry>& entries(Direction d) const {
    return d == Direction::sent ? sent_.entries : received_.entries;
  }
  const std::vector<HistoryEntry>& sent() const { return sent_.entries; }
  const std::vector<HistoryEntry>& received() const { return received_.entries; }

  template <class T>
  TagView<T> sent_of() const {
    return sent_.view<T>();
  }
  template <class T>
  TagView<T> received_of() const {
    return received_.view<T>();
  }
  /// Entries of type T whose slot field equals s. T must carry a slot.
  template <class T>
  TagView<T> sent_at(Slot s) const {
    return sent_.view_at<T>(s);
  }
  template <class T>
  TagView<T> received_at(Slot s) const {
    return received_.view_at<T>(s);
  }

  std::size_t size() const { return sent_.entries.size() + received_.entries.size(); }

 private:
  struct Side {
    std::vector<HistoryEntry> entries;
    std::array<std::vector<std::uint32_t>, kMessageKinds> by_tag;
    std::array<std::unordered_map<Slot, std::vector<std::uint32_t>>, kMessageKinds> by_slot;

    void append(const Message& m, ProcessId peer);

    template <class T>
    TagView<T> view() const {
      return {entries, by_tag[tag_of<T>()]};
    }
    template <class T>
    TagView<T> view_at(Slot s) const {
      static const std::vector<std::uint32_t> kNone;
      const auto& index = by_slot[tag_of<T>()];
      auto it = index.find(s);
      return {entries, it == index.end() ? kNone : it->second};
    }
  };

  Side sent_;
  Side received_;
};

/// Slot carried by m, if its type has one.
std::optional<Slot> slot_of(const Message& m);

// Query primitives over a TagView. Patterns are predicates over (message, peer).

template <class T, class Pred>
std::optional<std::pair<T, ProcessId>> exists(const TagView<T>& view, Pred&& pred) {
  for (auto [m, peer] : view) {
    if (pred(m, peer)) return std::pair<T, ProcessId>{m, peer};
  }
  return std::nullopt;
}

/// Vacuously true on an empty match set.
template <class T, class Pred>
bool forall(const TagView<T>& view, Pred&& pred) {
  for (auto [m, peer] : view) {
    if (!pred(m, peer)) return false;
  }
  return true;
}

/// Cardinality of the set of distinct projections over matching entries.
template <class T, class Pred, class Proj>
std::size_t count_distinct(const TagView<T>& view, Pred&& pred, Proj&& proj) {
  using Key = std::decay_t<decltype(proj(std::declval<const T&>(), ProcessId{}))>;
  std::set<Key> keys;
  for (auto [m, peer] : view) {
    if (pred(m, peer)) keys.insert(proj(m, peer));
  }
  return keys.size();
}

/// Maximum projection over matching entries; nullopt plays the role of "undefined".
template <class T, class Pred, class Proj>
auto max_of(const TagView<T>& view, Pred&& pred, Proj&& proj)
    -> std::optional<std::decay_t<decltype(proj(std::declval<const T&>(), ProcessId{}))>> {
  using Key = std::decay_t<decltype(proj(std::declval<const T&>(), ProcessId{}))>;
  std::optional<Key> best;
  for (auto [m, peer] : view) {
    if (!pred(m, peer)) continue;
    auto k = proj(m, peer);
    if (!best || *best < k) best = std::move(k);
  }
  return best;
}

template <class T, class Pred, class Proj>
auto select(const TagView<T>& view, Pred&& pred, Proj&& proj) {
  using Key = std::decay_t<decltype(proj(std::declval<const T&>(), ProcessId{}))>;
  std::set<Key> out;
  for (auto [m, peer] : view) {
    if (pred(m, peer)) out.insert(proj(m, peer));
  }
  return out;
}

inline constexpr auto kAny = [](const auto&, ProcessId) { return true; };
inline constexpr auto kPeer = [](const auto&, ProcessId p) { return p; };

// Runtime pattern facade, used by the CLI, the debug tooling and tests.

enum class QueryKind : std::uint8_t { exists, forall, count, max, select };

enum class Field : std::uint8_t { peer, ballot, slot, command, value, round, timestamp };

/// A tag, a direction, and constants for some fields; the rest are free.
struct MessagePattern {
  Direction direction = Direction::received;
  std::size_t tag = 0;
  std::optional<ProcessId> peer;
  std::optional<Ballot> ballot;
  std::optional<Slot> slot;
  std::optional<Command> command;
  std::optional<Value> value;
  /// For forall: the property each match must satisfy, as "ballot < bound".
  std::optional<Ballot> ballot_below;
  /// Projection for count, max and select.
  Field project = Field::peer;
};

/// A projected field value. Ordered so max is well defined.
using FieldValue = std::variant<ProcessId, Ballot, Slot, Command>;

struct QueryResult {
  bool holds = false;
  std::size_t count = 0;
  std::optional<FieldValue> max;
  std::set<FieldValue> selected;
  /// Witness entry for exists.
  std::optional<HistoryEntry> witness;
};

bool matches(const MessagePattern& p, const HistoryEntry& e);
std::optional<FieldValue> project(Field f, const HistoryEntry& e);
QueryResult query(const MessageHistory& h, QueryKind kind, const MessagePattern& p);

/// JSON-lines dump: {"dir": "sent"|"received", "peer": ..., "message": {...}}.
std::string dump_jsonl(const MessageHistory& h);

}  // namespace paxsim
