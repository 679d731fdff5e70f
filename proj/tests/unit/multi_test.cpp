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

#include "drive.hpp"
#include "gen.hpp"
#include "paxsim/multi.hpp"

namespace paxsim {
namespace {

using namespace testing;

const ProcessSet kLeaders{L(1), L(2), L(3)};
const ProcessSet kAcceptors{A(1), A(2), A(3)};
const ProcessSet kReplicas{R(1), R(2), R(3)};

std::vector<std::pair<Slot, Command>> proposals(const Effects& fx) {
  std::vector<std::pair<Slot, Command>> out;
  for (const auto& [m, to] : sends_of<Propose>(fx)) {
    if (to == *kLeaders.begin() || out.empty() || out.back() != std::pair{m.s, m.c}) out.emplace_back(m.s, m.c);
  }
  return out;
}

// ---------------------------------------------------------------- Replica

TEST(ReplicaTest, FirstRequestProposedAtSlotOne) {
  Replica r(R(1), kLeaders, {});
  Driver d;
  const Command c = app(1, 1);
  const auto fx = d.deliver(r, Request{c}, C(1));
  const auto props = sends_of<Propose>(fx);
  ASSERT_EQ(props.size(), 3u);
  for (const auto& [m, to] : props) EXPECT_EQ(m, (Propose{1, c}));
  EXPECT_EQ(r.slot_in(), 2);
  EXPECT_EQ(r.slot_out(), 1);
}

TEST(ReplicaTest, WindowExhaustionStopsProposals) {
  Replica r(R(1), kLeaders, {});
  Driver d;
  for (int i = 1; i <= 5; ++i) d.deliver(r, Request{app(1, i)}, C(1));
  EXPECT_EQ(r.slot_in(), 6);
  const auto fx = d.deliver(r, Request{app(1, 6)}, C(1));
  EXPECT_TRUE(sends_of<Propose>(fx).empty());
  EXPECT_EQ(r.slot_in(), 6);
}

TEST(ReplicaTest, ReproposesCommandDisplacedByAnotherDecision) {
  Replica r(R(1), kLeaders, {});
  Driver d;
  for (int i = 1; i <= 3; ++i) d.deliver(r, Request{app(1, i)}, C(1));
  ASSERT_EQ(r.slot_in(), 4);
  const Command other = app(2, 9);
  const auto fx = d.deliver(r, Decision{3, other}, L(1));
  const auto props = proposals(fx);
  ASSERT_EQ(props.size(), 1u);
  EXPECT_EQ(props[0], (std::pair<Slot, Command>{4, app(1, 3)}));
  EXPECT_EQ(r.slot_in(), 5);
}

TEST(ReplicaTest, AppliesDecisionAndResponds) {
  Replica r(R(1), kLeaders, {});
  Driver d;
  const Command c = app(1, 1, "put x 7");
  d.deliver(r, Request{c}, C(1));
  const auto fx = d.deliver(r, Decision{1, c}, L(1));
  const auto responses = sends_of<Response>(fx);
  ASSERT_EQ(responses.size(), 1u);
  EXPECT_EQ(responses[0].first, (Response{1, "7"}));
  EXPECT_EQ(responses[0].second, C(1));
  EXPECT_EQ(r.slot_out(), 2);
  EXPECT_EQ(r.state().at("x"), "7");
  ASSERT_EQ(fx.outputs.size(), 1u);
  EXPECT_EQ(std::get<AppliedOutput>(fx.outputs[0]), (AppliedOutput{1, c, "7"}));
}

TEST(ReplicaTest, SkipsCommandDecidedEarlier) {
  Replica r(R(1), kLeaders, {});
  Driver d;
  const Command c = app(1, 1, "append x a");
  d.deliver(r, Decision{1, c}, L(1));
  const auto fx = d.deliver(r, Decision{2, c}, L(1));
  EXPECT_TRUE(sends_of<Response>(fx).empty());
  EXPECT_EQ(r.slot_out(), 3);
  EXPECT_EQ(r.state().at("x"), "a");
  EXPECT_EQ(r.applied().size(), 1u);
}

TEST(ReplicaTest, ReconfigIsConsumedOnTheProposeSide) {
  VariantConfig cfg;
  cfg.window = 1;
  Replica r(R(1), {L(1)}, cfg);
  Driver d;
  const Command c1 = app(1, 1);
  d.deliver(r, Request{c1}, C(1));
  const Command reconf{C(1), 2, make_reconfig({L(4)})};
  const auto fx = d.deliver(r, Decision{1, reconf}, L(1));
  EXPECT_TRUE(sends_of<Response>(fx).empty());
  EXPECT_EQ(r.slot_out(), 2);
  EXPECT_TRUE(r.applied().empty());
  EXPECT_EQ(r.leaders(), (ProcessSet{L(4)}));
  const auto props = sends_of<Propose>(fx);
  ASSERT_EQ(props.size(), 1u);
  EXPECT_EQ(props[0].second, L(4));
  EXPECT_EQ(props[0].first, (Propose{2, c1}));
}

TEST(ReplicaTest, ConflictingDecisionsSurface) {
  Replica r(R(1), kLeaders, {});
  Driver d;
  StepContext ctx{0, d.chooser()};
  r.deliver(Decision{1, app(1, 1)}, L(1), ctx);
  r.deliver(Decision{1, app(1, 2)}, L(2), ctx);
  r.settle(ctx);
  EXPECT_EQ(r.conflicts(), (std::vector<Slot>{1}));
}

TEST(ReplicaTest, NeverProposesOutsideWindowOrAppliesOutOfOrder) {
  Rng rng(8);
  for (int run = 0; run < 100; ++run) {
    VariantConfig cfg;
    cfg.window = 1 + static_cast<std::int64_t>(rng() % 5);
    Replica r(R(1), kLeaders, cfg);
    Driver d(run);
    std::map<Slot, Command> decided;
    for (int k = 0; k < 40; ++k) {
      Effects fx;
      if (rng() % 2) {
        fx = d.deliver(r, Request{app(1, 1 + static_cast<std::int64_t>(rng() % 8))}, C(1));
      } else {
        const Slot s = 1 + static_cast<Slot>(rng() % 10);
        const Command c = decided.contains(s) ? decided.at(s) : app(1, 1 + static_cast<std::int64_t>(rng() % 8));
        decided[s] = c;
        fx = d.deliver(r, Decision{s, c}, L(1));
      }
      for (const auto& [m, to] : sends_of<Propose>(fx)) ASSERT_LT(m.s, r.slot_out() + cfg.window);
    }
    Slot prev = 0;
    std::set<Command> seen;
    for (const auto& a : r.applied()) {
      ASSERT_GT(a.slot, prev);
      ASSERT_TRUE(seen.insert(a.command).second);
      prev = a.slot;
    }
  }
}

TEST(KvApply, Verbs) {
  const auto f = kv_apply();
  AppState s;
  std::string out;
  std::tie(s, out) = f(AppOp{"put k hello world"}, s);
  EXPECT_EQ(out, "hello world");
  std::tie(s, out) = f(AppOp{"append k !"}, s);
  EXPECT_EQ(out, "hello world!");
  std::tie(s, out) = f(AppOp{"get k"}, s);
  EXPECT_EQ(out, "hello world!");
  std::tie(s, out) = f(AppOp{"get missing"}, s);
  EXPECT_EQ(out, "");
  std::tie(s, out) = f(AppOp{"frobnicate k"}, s);
  EXPECT_EQ(out, "error");
}

// ---------------------------------------------------------------- Leader

Leader make_leader(ProcessId self, ProcessSet acceptors = kAcceptors, VariantConfig cfg = {}) {
  return Leader(self, std::move(acceptors), kReplicas, cfg);
}

TEST(LeaderTest, StartSends1aToAllAcceptors) {
  auto l = make_leader(L(1));
  Driver d;
  const auto m = sends_of<M1a>(d.start(l));
  ASSERT_EQ(m.size(), 3u);
  for (const auto& [x, to] : m) EXPECT_EQ(x.b, (Ballot{0, L(1)}));
  EXPECT_EQ(l.phase(), Leader::Phase::phase1);
}

TEST(LeaderTest, SingleAcceptor) {
  auto l = make_leader(L(1), {A(1)});
  Driver d;
  EXPECT_EQ(sends_of<M1a>(d.start(l)).size(), 1u);
}

TEST(LeaderTest, PreemptionIncrementsPastPreemptor) {
  auto l = make_leader(L(1));
  Driver d;
  d.start(l);
  const auto m = sends_of<M1a>(d.deliver(l, Preempt{{4, L(2)}}, A(1)));
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0].first.b, (Ballot{5, L(1)}));
  EXPECT_EQ(l.rounds_attempted(), 2);
}

TEST(LeaderTest, PreemptThreeGivesRoundFour) {
  auto l = make_leader(L(1));
  Driver d;
  d.start(l);
  d.deliver(l, Preempt{{3, L(2)}}, A(1));
  EXPECT_EQ(l.ballot(), (Ballot{4, L(1)}));
}

TEST(LeaderTest, LowerPreemptIgnored) {
  auto l = make_leader(L(1));
  Driver d;
  d.start(l);
  EXPECT_TRUE(d.deliver(l, Preempt{{0, ProcessId{Role::leader, 0}}}, A(1)).empty());
  EXPECT_EQ(l.ballot(), (Ballot{0, L(1)}));
}

TEST(LeaderTest, TwoPreemptsInOneDispatchUseTheMaximum) {
  auto l = make_leader(L(1));
  Driver d;
  d.start(l);
  StepContext ctx{0, d.chooser()};
  l.deliver(Preempt{{2, L(2)}}, A(1), ctx);
  l.deliver(Preempt{{5, L(3)}}, A(2), ctx);
  l.settle(ctx);
  EXPECT_EQ(l.ballot(), (Ballot{6, L(1)}));
}

TEST(LeaderTest, EmptyPromisesGoStraightToPhase2) {
  auto l = make_leader(L(1));
  Driver d;
  d.start(l);
  const Ballot b = l.ballot();
  EXPECT_TRUE(d.deliver(l, M1b{b, {}}, A(1)).sends.empty());
  EXPECT_EQ(l.phase(), Leader::Phase::phase1);
  const auto fx = d.deliver(l, M1b{b, {}}, A(2));
  EXPECT_TRUE(sends_of<M2a>(fx).empty());
  EXPECT_EQ(l.phase(), Leader::Phase::phase2);
}

TEST(LeaderTest, ReproposesMaxBallotPvaluePerSlot) {
  auto l = make_leader(L(3));
  Driver d;
  d.start(l);
  const Ballot b = l.ballot();
  const Command c1 = app(1, 1), c2 = app(1, 2), c3 = app(1, 3);
  d.deliver(l, M1b{b, {PValue{{0, L(1)}, 1, c1}, PValue{{0, L(1)}, 2, c3}}}, A(1));
  const auto fx = d.deliver(l, M1b{b, {PValue{{0, L(2)}, 1, c2}}}, A(2));
  std::set<std::pair<Slot, Command>> sent;
  for (const auto& [m, to] : sends_of<M2a>(fx)) {
    EXPECT_EQ(m.b, b);
    sent.emplace(m.s, m.c);
  }
  EXPECT_EQ(sent, (std::set<std::pair<Slot, Command>>{{1, c2}, {2, c3}}));
}

TEST(LeaderTest, FreshProposalGets2a) {
  Driver d;
  auto l = make_leader(L(1));
  d.start(l);
  d.deliver(l, M1b{l.ballot(), {}}, A(1));
  d.deliver(l, M1b{l.ballot(), {}}, A(2));
  const auto m = sends_of<M2a>(d.deliver(l, Propose{7, app(1, 1)}, R(1)));
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0].first, (M2a{l.ballot(), 7, app(1, 1)}));
}

TEST(LeaderTest, ClaimedSlotStaysSilent) {
  Driver d;
  auto l = make_leader(L(1));
  d.start(l);
  d.deliver(l, M1b{l.ballot(), {}}, A(1));
  d.deliver(l, M1b{l.ballot(), {}}, A(2));
  d.deliver(l, Propose{7, app(1, 1)}, R(1));
  EXPECT_TRUE(sends_of<M2a>(d.deliver(l, Propose{7, app(1, 2)}, R(2))).empty());
}

TEST(LeaderTest, ProposalResentUnderNewBallot) {
  Driver d;
  auto l = make_leader(L(1));
  d.start(l);
  d.deliver(l, M1b{l.ballot(), {}}, A(1));
  d.deliver(l, M1b{l.ballot(), {}}, A(2));
  d.deliver(l, Propose{7, app(1, 1)}, R(1));
  d.deliver(l, Preempt{{1, L(2)}}, A(1));
  const Ballot nb = l.ballot();
  ASSERT_EQ(nb, (Ballot{2, L(1)}));
  d.deliver(l, M1b{nb, {}}, A(1));
  const auto m = sends_of<M2a>(d.deliver(l, M1b{nb, {}}, A(3)));
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0].first, (M2a{nb, 7, app(1, 1)}));
}

TEST(LeaderTest, MajorityOf2bDecides) {
  Driver d;
  auto l = make_leader(L(1));
  d.start(l);
  d.deliver(l, M1b{l.ballot(), {}}, A(1));
  d.deliver(l, M1b{l.ballot(), {}}, A(2));
  const Command c = app(1, 1);
  d.deliver(l, Propose{1, c}, R(1));
  EXPECT_TRUE(sends_of<Decision>(d.deliver(l, M2b{l.ballot(), 1, c}, A(1))).empty());
  EXPECT_TRUE(sends_of<Decision>(d.deliver(l, M2b{l.ballot(), 1, c}, A(1))).empty());
  const auto dec = sends_of<Decision>(d.deliver(l, M2b{l.ballot(), 1, c}, A(2)));
  ASSERT_EQ(dec.size(), 3u);
  EXPECT_EQ(dec[0].first, (Decision{1, c}));
  std::set<ProcessId> to;
  for (const auto& [m, dst] : dec) to.insert(dst);
  EXPECT_EQ(to, kReplicas);
}

// ---------------------------------------------------------------- Acceptor

TEST(MultiAcceptorTest, FreshAcceptorPromises) {
  MultiAcceptor a(A(1), {});
  Driver d;
  const auto m = sends_of<M1b>(d.deliver(a, M1a{{0, L(1)}}, L(1)));
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].first, (M1b{{0, L(1)}, {}}));
}

TEST(MultiAcceptorTest, NoPromiseBelowAnEarlierOne) {
  MultiAcceptor a(A(1), {});
  Driver d;
  d.deliver(a, M1a{{2, L(2)}}, L(2));
  const auto fx = d.deliver(a, M1a{{1, L(1)}}, L(1));
  EXPECT_TRUE(sends_of<M1b>(fx).empty());
}

TEST(MultiAcceptorTest, PromiseCarriesAllAcceptedPvalues) {
  MultiAcceptor a(A(1), {});
  Driver d;
  const Command c1 = app(1, 1), c2 = app(1, 2);
  d.deliver(a, M2a{{0, L(1)}, 1, c1}, L(1));
  d.deliver(a, M2a{{1, L(2)}, 1, c2}, L(2));
  const auto m = sends_of<M1b>(d.deliver(a, M1a{{2, L(1)}}, L(1)));
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].first.accepted, (std::vector<PValue>{{{0, L(1)}, 1, c1}, {{1, L(2)}, 1, c2}}));
}

TEST(MultiAcceptorTest, AcceptsUnpreparedBallot) {
  MultiAcceptor a(A(1), {});
  Driver d;
  const auto m = sends_of<M2b>(d.deliver(a, M2a{{0, L(1)}, 1, app(1, 1)}, L(1)));
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].first, (M2b{{0, L(1)}, 1, app(1, 1)}));
}

TEST(MultiAcceptorTest, Rejects2aBelowPromise) {
  MultiAcceptor a(A(1), {});
  Driver d;
  d.deliver(a, M1a{{3, L(2)}}, L(2));
  const auto fx = d.deliver(a, M2a{{1, L(1)}, 1, app(1, 1)}, L(1));
  EXPECT_TRUE(sends_of<M2b>(fx).empty());
  const auto pre = sends_of<Preempt>(fx);
  ASSERT_EQ(pre.size(), 1u);
  EXPECT_EQ(pre[0].first.b, (Ballot{3, L(2)}));
}

TEST(MultiAcceptorTest, Accepts2aAbovePromise) {
  MultiAcceptor a(A(1), {});
  Driver d;
  d.deliver(a, M1a{{1, L(1)}}, L(1));
  const auto m = sends_of<M2b>(d.deliver(a, M2a{{2, L(2)}, 4, app(1, 1)}, L(2)));
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].first, (M2b{{2, L(2)}, 4, app(1, 1)}));
}

TEST(MultiAcceptorTest, PreemptsOnlyStrictlyLowerBallots) {
  MultiAcceptor a(A(1), {});
  Driver d;
  EXPECT_TRUE(sends_of<Preempt>(d.deliver(a, M1a{{0, L(1)}}, L(1))).empty());
  EXPECT_TRUE(sends_of<Preempt>(d.deliver(a, M1a{{0, L(1)}}, L(1))).empty());
  d.deliver(a, M2a{{5, L(2)}, 1, app(1, 1)}, L(2));
  const auto pre = sends_of<Preempt>(d.deliver(a, M1a{{1, L(1)}}, L(1)));
  ASSERT_EQ(pre.size(), 1u);
  EXPECT_EQ(pre[0].first.b, (Ballot{5, L(2)}));
  EXPECT_EQ(pre[0].second, L(1));
}

TEST(MultiAcceptorTest, UnreducedPayloadNeverShrinks) {
  Rng rng(12);
  MultiAcceptor a(A(1), {});
  Driver d;
  std::size_t last = 0;
  for (int k = 0; k < 200; ++k) {
    const Ballot b{k, L(1 + k % 3)};
    d.deliver(a, M2a{b, gen_slot(rng), gen_command(rng)}, b.leader);
    const auto m = sends_of<M1b>(d.deliver(a, M1a{Ballot{k + 1, L(1)}}, L(1)));
    ASSERT_EQ(m.size(), 1u);
    ASSERT_GE(m[0].first.accepted.size(), last);
    last = m[0].first.accepted.size();
  }
}

// ---------------------------------------------------------------- Client

TEST(ClientTest, SendsEveryRequestToAllReplicasAtStart) {
  Client c(C(1), kReplicas, {AppOp{"put a 1"}, AppOp{"put b 2"}});
  Driver d;
  const auto reqs = sends_of<Request>(d.start(c));
  ASSERT_EQ(reqs.size(), 6u);
  EXPECT_EQ(c.commands()[0].cmd_id, 1);
  EXPECT_EQ(c.commands()[1].cmd_id, 2);
  EXPECT_EQ(c.pending().size(), 2u);
  d.deliver(c, Response{2, "2"}, R(3));
  EXPECT_TRUE(c.answered(2));
  EXPECT_FALSE(c.answered(1));
  EXPECT_EQ(c.pending().size(), 1u);
}

TEST(ClientTest, PacedRequestsChainThroughTimer) {
  Client c(C(1), kReplicas, {AppOp{"put a 1"}, AppOp{"put b 2"}}, ClientConfig{.interval = 10});
  Driver d;
  const auto fx = d.start(c);
  EXPECT_EQ(sends_of<Request>(fx).size(), 3u);
  EXPECT_TRUE(arms(fx, TimerKind::client_send));
  const auto next = d.fire(c, {TimerKind::client_send, 1});
  ASSERT_EQ(sends_of<Request>(next).size(), 3u);
  EXPECT_EQ(sends_of<Request>(next)[0].first.c.cmd_id, 2);
}

TEST(ClientTest, RetriesAreBoundedAndCancelledByResponse) {
  Client c(C(1), kReplicas, {AppOp{"put a 1"}}, ClientConfig{.retry_after = 5, .max_retries = 2});
  Driver d;
  EXPECT_TRUE(arms(d.start(c), TimerKind::client_retry));
  EXPECT_EQ(sends_of<Request>(d.fire(c, {TimerKind::client_retry, 1})).size(), 3u);
  EXPECT_EQ(sends_of<Request>(d.fire(c, {TimerKind::client_retry, 1})).size(), 3u);
  EXPECT_TRUE(sends_of<Request>(d.fire(c, {TimerKind::client_retry, 1})).empty());

  Client c2(C(1), kReplicas, {AppOp{"put a 1"}}, ClientConfig{.retry_after = 5, .max_retries = 2});
  d.start(c2);
  EXPECT_TRUE(cancels(d.deliver(c2, Response{1, "1"}, R(1)), TimerKind::client_retry));
}

}  // namespace
}  // namespace paxsim
