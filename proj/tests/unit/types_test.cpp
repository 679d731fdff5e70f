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
#include <vector>

#include "drive.hpp"
#include "gen.hpp"
#include "json.hpp"
#include "paxsim/json_codec.hpp"
#include "paxsim/message.hpp"

namespace paxsim {
namespace {

using testing::L;

TEST(Ballot, Irreflexive) { EXPECT_FALSE(ballot_less({0, L(1)}, {0, L(1)})); }

TEST(Ballot, RoundDominatesLeader) { EXPECT_TRUE(ballot_less({0, L(2)}, {1, L(1)})); }

TEST(Ballot, MatchesSortOfAllNineTuples) {
  std::vector<Ballot> all;
  for (int r = 0; r <= 2; ++r) {
    for (int l = 1; l <= 3; ++l) all.push_back({r, L(l)});
  }
  // Independent order: rank every tuple by its position in round-major enumeration.
  auto rank = [](const Ballot& b) { return b.round * 3 + (b.leader.index - 1); };
  for (const auto& a : all) {
    for (const auto& b : all) EXPECT_EQ(ballot_less(a, b), rank(a) < rank(b));
  }
}

TEST(Ballot, StrictTotalOrderProperty) {
  testing::Rng rng(3);
  for (int i = 0; i < 20000; ++i) {
    const Ballot a = testing::gen_ballot(rng);
    const Ballot b = testing::gen_ballot(rng);
    const Ballot c = testing::gen_ballot(rng);
    const int holds = int(ballot_less(a, b)) + int(ballot_less(b, a)) + int(a == b);
    ASSERT_EQ(holds, 1);
    if (ballot_less(a, b) && ballot_less(b, c)) ASSERT_TRUE(ballot_less(a, c));
  }
}

TEST(ProcessIdOrder, RoleRankThenIndex) {
  EXPECT_LT((ProcessId{Role::proposer, 9}), (ProcessId{Role::acceptor, 1}));
  EXPECT_LT((ProcessId{Role::leader, 1}), (ProcessId{Role::leader, 2}));
  EXPECT_LT((ProcessId{Role::replica, 5}), (ProcessId{Role::leader, 1}));
}

TEST(ProcessIdText, RoundTrips) {
  for (Role r : {Role::proposer, Role::acceptor, Role::learner, Role::replica, Role::leader, Role::client,
                 Role::merged}) {
    const ProcessId id{r, 12};
    EXPECT_EQ(parse_process_id(to_string(id)), id);
  }
  EXPECT_EQ(to_string(L(1)), "L1");
  EXPECT_THROW(parse_process_id("X1"), ConfigError);
  EXPECT_THROW(parse_process_id("L"), ConfigError);
}

TEST(Quorum, Examples) {
  EXPECT_EQ(quorum_size(3), 2);
  EXPECT_EQ(quorum_size(1), 1);
  EXPECT_EQ(quorum_size(4), 3);
  EXPECT_EQ(quorum_size(5), 3);
}

TEST(Quorum, SmallestStrictMajorityByScan) {
  for (std::int64_t n = 1; n <= 50; ++n) {
    std::int64_t k = 1;
    while (!(2 * k > n)) ++k;
    EXPECT_EQ(quorum_size(n), k) << n;
    EXPECT_GT(quorum_size(n) + quorum_size(n), n);
  }
}

TEST(Quorum, ZeroAcceptorsRejected) { EXPECT_THROW(quorum_size(0), ConfigError); }

TEST(Operation, IsReconfig) {
  EXPECT_FALSE(is_reconfig(AppOp{"put x 1"}));
  EXPECT_TRUE(is_reconfig(make_reconfig({L(4), L(5), L(6)})));
}

TEST(Operation, EmptyReconfigRejected) {
  EXPECT_THROW(make_reconfig({}), ConfigError);
  EXPECT_THROW(make_reconfig({testing::A(1)}), ConfigError);
}

TEST(Serialization, CanonicalShape) {
  const auto j = nlohmann::json::parse(encode(M1a{{2, L(3)}}));
  EXPECT_EQ(j.at("tag"), "1a");
  EXPECT_EQ(j.at("fields").at("b"), nlohmann::json::parse(R"([2, ["leader", 3]])"));
  EXPECT_EQ(encode(M1a{{2, L(3)}}).find('\n'), std::string::npos);
}

TEST(Serialization, RoundTripsEveryConstructor) {
  testing::Rng rng(11);
  std::vector<int> seen(kMessageKinds, 0);
  for (int i = 0; i < 20000; ++i) {
    const Message m = i % 2 ? testing::gen_message(rng) : testing::gen_wild_message(rng);
    ++seen[m.index()];
    const std::string line = encode(m);
    ASSERT_EQ(line.find('\n'), std::string::npos);
    ASSERT_EQ(decode(line), m) << line;
  }
  for (std::size_t t = 0; t < kMessageKinds; ++t) EXPECT_GT(seen[t], 0) << tag_name(t);
}

TEST(Serialization, MalformedInputRejected) {
  EXPECT_THROW(decode("{"), std::invalid_argument);
  EXPECT_THROW(decode(R"({"tag":"nope","fields":{}})"), std::invalid_argument);
  EXPECT_THROW(decode(R"({"tag":"1a","fields":{}})"), std::invalid_argument);
}

TEST(Serialization, InvalidUtf8PayloadRejected) {
  const Message m = Request{testing::app(1, 1, std::string("put x \xff"))};
  EXPECT_THROW(encode(m), std::invalid_argument);
}

TEST(Serialization, TagNamesRoundTrip) {
  for (std::size_t t = 0; t < kMessageKinds; ++t) EXPECT_EQ(parse_tag(tag_name(t)), t);
  EXPECT_FALSE(parse_tag("bogus").has_value());
}

}  // namespace
}  // namespace paxsim
