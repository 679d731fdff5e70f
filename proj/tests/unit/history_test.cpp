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

#include <gtest/gtest.h>

#include <algorithm>

#include "drive.hpp"
#include "gen.hpp"
#include "oracle.hpp"
#include "paxsim/guards.hpp"
#include "paxsim/history.hpp"

namespace paxsim {
namespace {

using namespace testing;

TEST(History, RecordSentOneEntryPerDestination) {
  MessageHistory h;
  h.record_sent(M1a{{0, L(1)}}, ProcessSet{A(1), A(2), A(3)});
  EXPECT_EQ(h.sent().size(), 3u);
  EXPECT_EQ(h.received().size(), 0u);
}

TEST(History, RecordingTwiceKeepsBoth) {
  MessageHistory h;
  h.record_sent(M1a{{0, L(1)}}, A(1));
  h.record_sent(M1a{{0, L(1)}}, A(1));
  EXPECT_EQ(h.sent().size(), 2u);
}

TEST(History, EmptyDestinationsIsNoop) {
  MessageHistory h;
  h.record_sent(M1a{{0, L(1)}}, ProcessSet{});
  EXPECT_EQ(h.size(), 0u);
}

TEST(History, ExistsAfterRecordSent) {
  MessageHistory h;
  const M2a m{{1, L(2)}, 3, app(1, 1)};
  h.record_sent(m, A(2));
  MessagePattern p;
  p.direction = Direction::sent;
  p.tag = tag_of<M2a>();
  p.slot = 3;
  const auto r = query(h, QueryKind::exists, p);
  EXPECT_TRUE(r.holds);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_EQ(r.witness->peer, A(2));
  // Direct scan.
  EXPECT_TRUE(std::any_of(h.sent().begin(), h.sent().end(),
                          [&](const HistoryEntry& e) { return e.message == Message{m}; }));
}

TEST(History, RecordReceived) {
  MessageHistory h;
  h.record_received(Decision{1, app(1, 1)}, L(1));
  ASSERT_EQ(h.received().size(), 1u);
  EXPECT_EQ(h.received()[0].peer, L(1));
  EXPECT_EQ(h.received_at<Decision>(1).size(), 1u);
  EXPECT_EQ(h.received_at<Decision>(2).size(), 0u);
}

QueryResult count_responders(const MessageHistory& h, const Ballot& b) {
  MessagePattern p;
  p.tag = tag_of<BasicRespond>();
  p.ballot = b;
  p.project = Field::peer;
  return query(h, QueryKind::count, p);
}

TEST(Query, CountDistinctRespondSenders) {
  MessageHistory h;
  const Ballot b{0, P(1)};
  h.record_received(BasicRespond{b, std::nullopt}, A(1));
  h.record_received(BasicRespond{b, std::nullopt}, A(2));
  h.record_received(BasicRespond{b, std::nullopt}, A(2));
  h.record_received(BasicRespond{{1, P(1)}, std::nullopt}, A(3));
  EXPECT_EQ(count_responders(h, b).count, 2u);
  EXPECT_EQ(guards::responders(h, b), (ProcessSet{A(1), A(2)}));
}

TEST(Query, ForallVacuousOnEmpty) {
  MessageHistory h;
  MessagePattern p;
  p.direction = Direction::sent;
  p.tag = tag_of<M1b>();
  p.ballot_below = Ballot{0, L(1)};
  EXPECT_TRUE(query(h, QueryKind::forall, p).holds);
  EXPECT_TRUE(guards::above_all_1b(h, {0, L(1)}));
}

TEST(Query, MaxBallotOverReceived1aAnd2a) {
  MessageHistory h;
  h.record_received(M1a{{1, L(1)}}, L(1));
  h.record_received(M2a{{2, L(2)}, 1, app(1, 1)}, L(2));
  EXPECT_EQ(guards::max_received_ballot(h), (Ballot{2, L(2)}));
  // Facade projection over each tag.
  MessagePattern p;
  p.tag = tag_of<M2a>();
  p.project = Field::ballot;
  EXPECT_EQ(query(h, QueryKind::max, p).max, std::optional<FieldValue>(Ballot{2, L(2)}));
}

TEST(Query, MaxOfEmptyIsUndefined) {
  MessageHistory h;
  MessagePattern p;
  p.tag = tag_of<M1a>();
  p.project = Field::ballot;
  EXPECT_FALSE(query(h, QueryKind::max, p).max.has_value());
  EXPECT_FALSE(guards::max_received_ballot(h).has_value());
}

// Full-scan evaluation of the facade, used as the oracle for the properties below.
QueryResult scan_query(const MessageHistory& h, QueryKind kind, const MessagePattern& p) {
  QueryResult r;
  r.holds = kind == QueryKind::forall;
  std::set<FieldValue> keys;
  for (const auto& e : h.entries(p.direction)) {
    if (!matches(p, e)) continue;
    if (kind == QueryKind::exists && !r.holds) {
      r.holds = true;
      r.witness = e;
    }
    if (kind == QueryKind::forall && p.ballot_below) {
      const auto b = project(Field::ballot, e);
      if (!b || !(std::get<Ballot>(*b) < *p.ballot_below)) r.holds = false;
    }
    if (auto v = project(p.project, e)) {
      keys.insert(*v);
      if (!r.max || *r.max < *v) r.max = v;
    }
  }
  if (kind == QueryKind::count || kind == QueryKind::select || kind == QueryKind::max) r.holds = !keys.empty();
  if (kind == QueryKind::count) r.count = keys.size();
  if (kind == QueryKind::select) r.selected = keys;
  if (kind != QueryKind::max) r.max.reset();
  return r;
}

MessagePattern random_pattern(Rng& rng) {
  MessagePattern p;
  p.direction = rng() % 2 ? Direction::sent : Direction::received;
  p.tag = rng() % kMessageKinds;
  if (rng() % 3 == 0) p.peer = gen_peer(rng);
  if (rng() % 3 == 0) p.ballot = gen_ballot(rng);
  if (rng() % 3 == 0) p.slot = gen_slot(rng);
  if (rng() % 4 == 0) p.command = gen_command(rng);
  if (rng() % 2 == 0) p.ballot_below = gen_ballot(rng);
  p.project = static_cast<Field>(rng() % 7);
  return p;
}

TEST(Query, FacadeMatchesFullScan) {
  Rng rng(5);
  for (int i = 0; i < 3000; ++i) {
    const auto h = gen_history(rng, 60);
    const auto p = random_pattern(rng);
    for (auto kind : {QueryKind::exists, QueryKind::forall, QueryKind::count, QueryKind::max, QueryKind::select}) {
      const auto got = query(h, kind, p);
      const auto want = scan_query(h, kind, p);
      ASSERT_EQ(got.holds, want.holds) << i;
      if (kind == QueryKind::count) ASSERT_EQ(got.count, want.count);
      if (kind == QueryKind::max) ASSERT_EQ(got.max, want.max);
      if (kind == QueryKind::select) ASSERT_EQ(got.selected, want.selected);
      if (kind == QueryKind::exists && want.holds) ASSERT_TRUE(matches(p, *got.witness));
    }
  }
}

TEST(Query, ForallIsNotExistsOfNegation) {
  Rng rng(9);
  for (int i = 0; i < 3000; ++i) {
    const auto h = gen_history(rng, 60);
    const auto p = random_pattern(rng);
    const Ballot bound = p.ballot_below.value_or(Ballot{2, L(2)});
    const bool forall = guards::above_all_1b(h, bound);
    const bool exists_not = std::any_of(h.sent().begin(), h.sent().end(), [&](const HistoryEntry& e) {
      const auto* m = std::get_if<M1b>(&e.message);
      return m && !(m->b < bound);
    });
    ASSERT_EQ(forall, !exists_not);
    ASSERT_EQ(guards::sent_1b_above(h, bound),
              std::any_of(h.sent().begin(), h.sent().end(), [&](const HistoryEntry& e) {
                const auto* m = std::get_if<M1b>(&e.message);
                return m && bound < m->b;
              }));
  }
}

TEST(Query, ExistsIsMonotoneUnderExtension) {
  Rng rng(13);
  for (int i = 0; i < 2000; ++i) {
    auto h = gen_history(rng, 40);
    MessagePattern p = random_pattern(rng);
    const bool before = query(h, QueryKind::exists, p).holds;
    for (int k = 0; k < 10; ++k) {
      if (rng() % 2) {
        h.record_sent(gen_message(rng), gen_peer(rng));
      } else {
        h.record_received(gen_message(rng), gen_peer(rng));
      }
    }
    if (before) ASSERT_TRUE(query(h, QueryKind::exists, p).holds);
  }
}

// Every guard output, for comparing two histories.
std::string guard_fingerprint(const MessageHistory& h, std::uint64_t seed) {
  Rng rng(seed);
  std::string out;
  for (int k = 0; k < 4; ++k) {
    const Ballot b = gen_ballot(rng);
    const Slot s = gen_slot(rng);
    const Command c = gen_command(rng);
    out += std::to_string(guards::responders(h, b).size());
    out += guards::highest_reported_value(h, b) ? std::to_string(*guards::highest_reported_value(h, b)) : "-";
    out += std::to_string(guards::above_all_responded(h, b)) + std::to_string(guards::responded_above(h, b));
    out += std::to_string(guards::majority_accepted(h, 3).size());
    for (const auto& x : guards::proposable_requests(h)) out += to_string(x);
    out += std::to_string(guards::decisions_at(h, s).size()) + std::to_string(guards::decided_before(h, c, s));
    out += std::to_string(guards::count_1b(h, b)) + std::to_string(guards::pvalues_from_1b(h, b).size());
    out += std::to_string(guards::unclaimed_proposals(h, b).size()) + std::to_string(guards::decidable(h, b, 2).size());
    out += std::to_string(guards::count_2b(h, b, s, c)) + std::to_string(guards::outstanding_2a(h, b).size());
    out += std::to_string(guards::preempted_by(h, b).has_value()) + std::to_string(guards::above_all_1b(h, b));
    out += std::to_string(guards::accepted_full(h).size()) + std::to_string(guards::accepted_reduced(h).size());
    out += std::to_string(guards::pings_answered(h, L(1), 0)) + "|";
  }
  return out;
}

MessageHistory rebuild(const std::vector<HistoryEntry>& sent, const std::vector<HistoryEntry>& received) {
  MessageHistory h;
  for (const auto& e : sent) h.record_sent(e.message, e.peer);
  for (const auto& e : received) h.record_received(e.message, e.peer);
  return h;
}

TEST(Query, DuplicateDeliveryDoesNotChangeExistence) {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const auto h = gen_history(rng, 40);
    if (h.received().empty()) continue;
    auto received = h.received();
    received.push_back(received[rng() % received.size()]);
    const auto dup = rebuild(h.sent(), received);
    ASSERT_EQ(guard_fingerprint(h, i), guard_fingerprint(dup, i)) << i;
  }
}

TEST(Query, EntryOrderDoesNotMatter) {
  Rng rng(19);
  for (int i = 0; i < 1000; ++i) {
    const auto h = gen_history(rng, 40);
    auto sent = h.sent();
    auto received = h.received();
    std::shuffle(sent.begin(), sent.end(), rng);
    std::shuffle(received.begin(), received.end(), rng);
    const auto permuted = rebuild(sent, received);
    // proposed_at and sent_decision return the first match; the protocols send one per slot.
    ASSERT_EQ(guard_fingerprint(h, i), guard_fingerprint(permuted, i)) << i;
  }
}

TEST(History, DumpIsOneLinePerEntry) {
  MessageHistory h;
  h.record_sent(M1a{{0, L(1)}}, ProcessSet{A(1), A(2)});
  h.record_received(Preempt{{1, L(2)}}, A(1));
  const auto text = dump_jsonl(h);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_NE(text.find("\"received\""), std::string::npos);
}

}  // namespace
}  // namespace paxsim
