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
#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "drive.hpp"
#include "paxsim/scenario.hpp"

namespace paxsim {
namespace {

using namespace testing;
namespace fs = std::filesystem;

Scenario basic_333() {
  Scenario sc;
  sc.algorithm = Algorithm::basic;
  sc.counts = {.proposers = 3, .acceptors = 3, .learners = 3, .leaders = 0, .replicas = 0, .clients = 0};
  return sc;
}

Scenario multi_3331() {
  Scenario sc;
  sc.counts = {.proposers = 0, .acceptors = 3, .learners = 0, .leaders = 3, .replicas = 3, .clients = 1};
  return sc;
}

// ---------------------------------------------------------------- topology

TEST(BuildTopology, BasicHasNineProcesses) {
  const auto d = build_topology(basic_333());
  EXPECT_EQ(d.sim->process_ids().size(), 9u);
  EXPECT_EQ(d.learners.size(), 3u);
  EXPECT_EQ(d.hosts.size(), 9u);
}

TEST(BuildTopology, BasicWiring) {
  const auto r = run_scenario(basic_333());
  ASSERT_TRUE(r.verdict.safe);
  for (const auto& e : r.trace.events) {
    if (e.kind != EventKind::send || !e.message) continue;
    const Role from = e.src.role, to = e.dst.role;
    if (std::holds_alternative<BasicPrepare>(*e.message) || std::holds_alternative<BasicAccept>(*e.message)) {
      EXPECT_EQ(from, Role::proposer);
      EXPECT_EQ(to, Role::acceptor);
    } else if (std::holds_alternative<BasicRespond>(*e.message)) {
      EXPECT_EQ(from, Role::acceptor);
      EXPECT_EQ(to, Role::proposer);
    } else if (std::holds_alternative<BasicAccepted>(*e.message)) {
      EXPECT_EQ(from, Role::acceptor);
      EXPECT_EQ(to, Role::learner);
    }
  }
}

TEST(BuildTopology, MultiHasTenProcesses) {
  const auto d = build_topology(multi_3331());
  EXPECT_EQ(d.sim->process_ids().size(), 10u);
  EXPECT_EQ(d.leaders.size(), 3u);
  EXPECT_EQ(d.clients.size(), 1u);
}

TEST(BuildTopology, FullyMergedHasFourHosts) {
  auto sc = multi_3331();
  sc.merged = parse_topology_name("L+A+R");
  const auto d = build_topology(sc);
  EXPECT_EQ(d.hosts.size(), 4u);
  for (int i = 1; i <= 3; ++i) {
    EXPECT_TRUE(d.sim->same_host(L(i), A(i)));
    EXPECT_TRUE(d.sim->same_host(L(i), R(i)));
  }
  EXPECT_FALSE(d.sim->same_host(L(1), L(2)));
}

TEST(BuildTopology, InvalidCountsRejected) {
  auto sc = multi_3331();
  sc.counts.acceptors = 0;
  EXPECT_THROW(build_topology(sc), ConfigError);
  sc = multi_3331();
  sc.counts.leaders = 0;
  EXPECT_THROW(build_topology(sc), ConfigError);
  sc = multi_3331();
  sc.counts.replicas = 0;
  EXPECT_THROW(build_topology(sc), ConfigError);
  sc = basic_333();
  sc.merged = {{Role::leader, Role::acceptor}};
  EXPECT_THROW(build_topology(sc), ConfigError);
}

TEST(BuildTopology, MakeProcessRejectsUndeployedId) {
  EXPECT_THROW(make_process(multi_3331(), L(4)), ConfigError);
  EXPECT_NO_THROW(make_process(multi_3331(), L(3)));
}

// ---------------------------------------------------------------- scenario files

TEST(ScenarioJson, RoundTrip) {
  Scenario sc = multi_3331();
  sc.name = "rt";
  sc.requests.count = 4;
  sc.requests.interval = 3;
  sc.requests.reconfig[2] = {L(1)};
  sc.variant.state_reduction = true;
  sc.variant.enable_all_fixes();
  sc.variant.window = 2;
  sc.merged = parse_topology_name("L+R");
  sc.faults.drop = 0.25;
  sc.faults.rules.push_back(ScriptedRule{.tag = Message{Propose{}}.index(), .slot = 3, .first_n = 2});
  sc.crashes = {{L(2), 40}};
  sc.start_ticks[L(3)] = 7;
  sc.seed = 99;
  sc.stop.max_rounds = 12;
  sc.expect.stuck = false;
  const auto j = scenario_to_json(sc);
  const auto back = scenario_from_json(j);
  EXPECT_EQ(scenario_to_json(back), j);
  EXPECT_EQ(back.variant, sc.variant);
  EXPECT_EQ(back.seed, 99u);
}

TEST(ScenarioJson, UnknownKeysRejected) {
  EXPECT_THROW(scenario_from_json(nlohmann::json{{"colour", 1}}), ConfigError);
  EXPECT_THROW(scenario_from_json(nlohmann::json{{"variant", {{"fix_everything", true}}}}), ConfigError);
  EXPECT_THROW(scenario_from_json(nlohmann::json{{"algorithm", "raft"}}), ConfigError);
  EXPECT_THROW(scenario_from_json(nlohmann::json{{"faults", {{"rules", {{{"tag", "nope"}}}}}}}), ConfigError);
}

TEST(ScenarioJson, DefaultsAreTheTenProcessSetup) {
  const auto sc = scenario_from_json(nlohmann::json::object());
  EXPECT_EQ(sc.algorithm, Algorithm::multi);
  EXPECT_EQ(sc.variant.window, 5);
  EXPECT_EQ(sc.variant.timeout, 10);
  EXPECT_EQ(scenario_processes(sc).size(), 10u);
}

TEST(NamedScenarios, EveryBundledScenarioMeetsItsExpectation) {
  const auto all = list_scenarios();
  EXPECT_GE(all.size(), 10u);
  for (const auto& [name, description] : all) {
    EXPECT_FALSE(description.empty()) << name;
    const auto r = run_scenario(named_scenario(name));
    EXPECT_TRUE(r.expectation_met) << name << ": "
                                   << (r.expectation_failures.empty() ? "" : r.expectation_failures.front());
  }
  EXPECT_THROW(named_scenario("no-such-scenario"), ConfigError);
}

TEST(NamedScenarios, PaperFindings) {
  EXPECT_TRUE(run_scenario(named_scenario("stuck-replica-window")).verdict.metrics.stuck);
  const auto blow = run_scenario(named_scenario("no-reduction-blowup"));
  const auto reduced = run_scenario(named_scenario("no-reduction-blowup-reduced"));
  EXPECT_GE(blow.verdict.metrics.max_1b_payload_pvalues, 50);
  EXPECT_LE(reduced.verdict.metrics.max_1b_payload_pvalues, 1);
  const auto churn = run_scenario(named_scenario("ballot-churn"));
  EXPECT_GE(churn.verdict.metrics.ballot_rounds_attempted, 50);
  const auto fd = run_scenario(named_scenario("ballot-churn-fd"));
  EXPECT_TRUE(fd.all_decided);
  EXPECT_LT(fd.verdict.metrics.ballot_rounds_attempted, churn.verdict.metrics.ballot_rounds_attempted);
}

TEST(RunScenario, MaxRoundsStop) {
  auto sc = named_scenario("ballot-churn");
  sc.stop.max_rounds = 20;
  auto d = build_topology(sc);
  const auto r = run_deployment(sc, d);
  EXPECT_EQ(r.trace.end.reason, EndStatus::Reason::stopped);
  EXPECT_GE(rounds_attempted(d), 20);
  EXPECT_LT(rounds_attempted(d), 30);
}

TEST(RunScenario, AbortIsReported) {
  auto sc = multi_3331();
  sc.sim.max_firings = 1;
  const auto r = run_scenario(sc);
  EXPECT_EQ(r.trace.end.reason, EndStatus::Reason::aborted);
  EXPECT_FALSE(r.verdict.safe);
}

TEST(RunScenario, Reports) {
  const auto sc = named_scenario("multi-10-process");
  const auto r = run_scenario(sc);
  const auto log = decision_log(r.trace);
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), r.verdict.metrics.decisions);
  const auto j = report_json(sc, r);
  EXPECT_TRUE(j.contains("verdict"));
  EXPECT_NE(report_table(sc, r).find("decisions"), std::string::npos);
}

// ---------------------------------------------------------------- CLI

fs::path scratch_dir() {
  auto p = fs::temp_directory_path() / ("paxsim-cli-" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(PAXSIM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("run multi-10-process"), 0);
  EXPECT_EQ(cli("run stuck-replica-window"), 0);
  EXPECT_EQ(cli("run --leaders 1 --requests 3"), 0);
  EXPECT_EQ(cli("list-scenarios"), 0);
  EXPECT_EQ(cli("run no-such-scenario"), 2);
  EXPECT_EQ(cli("run --acceptors 0"), 2);
  EXPECT_NE(cli("frobnicate"), 0);
}

TEST(Cli, UnmetExpectationFails) {
  const auto dir = scratch_dir();
  const auto path = dir / "unmet.json";
  std::ofstream(path) << R"({"counts": {"leaders": 1}, "requests": {"count": 2}, "expect": {"stuck": true}})";
  EXPECT_NE(cli(path.string()), 0);
  EXPECT_EQ(cli("run " + path.string()), 1);
  fs::remove_all(dir);
}

TEST(Cli, TraceOutThenCheck) {
  const auto dir = scratch_dir();
  const auto trace = dir / "t.jsonl";
  const auto verdict = dir / "v.json";
  ASSERT_EQ(cli("run multi-10-process --drop 0.05 --fix-all --trace-out " + trace.string() + " --verdict-out " +
                verdict.string()),
            0);
  EXPECT_TRUE(fs::exists(verdict));
  EXPECT_EQ(cli("check " + trace.string()), 0);

  // A forged conflicting decision makes the checker fail.
  std::ifstream in(trace);
  auto rt = trace_from_jsonl(std::string((std::istreambuf_iterator<char>(in)), {}));
  const Decision* first = nullptr;
  for (const auto& e : rt.events) {
    if (e.kind == EventKind::send && e.message && std::holds_alternative<Decision>(*e.message)) {
      first = &std::get<Decision>(*e.message);
      break;
    }
  }
  ASSERT_NE(first, nullptr);
  TraceEvent forged = rt.events.back();
  forged.kind = EventKind::send;
  forged.message = Decision{first->s, app(1, 999, "put forged 1")};
  forged.timer.reset();
  forged.output.reset();
  rt.events.push_back(forged);
  const auto bad = dir / "bad.jsonl";
  std::ofstream(bad) << trace_to_jsonl(rt);
  EXPECT_EQ(cli("check " + bad.string()), 1);
  fs::remove_all(dir);
}

// ---------------------------------------------------------------- transport

TEST(Transport, MissingPeerAddressIsConfigError) {
  const auto sc = multi_3331();
  PeerMap peers;
  peers[L(1)] = Endpoint{"127.0.0.1", 0};
  EXPECT_THROW(serve_transport(sc, {L(1)}, peers), ConfigError);
  EXPECT_THROW(parse_endpoint("localhost"), ConfigError);
  EXPECT_THROW(peers_from_json(nlohmann::json{{"Q7", "127.0.0.1:1"}}), ConfigError);
}

template <class F>
bool wait_for(F&& cond, std::chrono::milliseconds limit) {
  const auto until = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < until) {
    if (cond()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  return cond();
}

TEST(Transport, TenProcessesDecideTenRequests) {
  auto sc = named_scenario("multi-10-process");
  sc.variant.timeout = 100;
  auto cluster = launch_local_cluster(sc, TransportOptions{.seed = sc.seed});
  EXPECT_EQ(cluster.nodes.size(), 10u);
  const bool done = wait_for([&] { return cluster.clients_done(); }, std::chrono::seconds(5));
  cluster.stop();
  EXPECT_TRUE(done);
}

TEST(Transport, MergedNodesDecide) {
  auto sc = named_scenario("multi-10-process");
  sc.merged = parse_topology_name("L+A+R");
  sc.variant.timeout = 100;
  auto cluster = launch_local_cluster(sc);
  EXPECT_EQ(cluster.nodes.size(), 4u);
  const bool done = wait_for([&] { return cluster.clients_done(); }, std::chrono::seconds(5));
  cluster.stop();
  EXPECT_TRUE(done);
}

TEST(Transport, KilledLeaderIsReplaced) {
  auto sc = named_scenario("multi-10-process");
  sc.variant.timeout = 30;
  sc.requests.interval = 25;
  sc.requests.retry_after = 200;
  sc.requests.max_retries = 10;
  auto cluster = launch_local_cluster(sc);
  auto node_of = [&](ProcessId id) -> TransportNode& {
    for (auto& n : cluster.nodes) {
      const auto h = n->hosted();
      if (std::find(h.begin(), h.end(), id) != h.end()) return *n;
    }
    throw std::logic_error("not hosted");
  };
  auto answered = [&] {
    std::size_t n = 0;
    node_of(C(1)).inspect(C(1), [&](const Process& p) {
      const auto& c = dynamic_cast<const Client&>(p);
      n = c.commands().size() - c.pending().size();
    });
    return n;
  };
  ASSERT_TRUE(wait_for([&] { return answered() >= 3; }, std::chrono::seconds(5)));
  node_of(L(3)).stop();
  const bool done = wait_for([&] { return cluster.clients_done(); }, std::chrono::seconds(10));
  cluster.stop();
  EXPECT_TRUE(done);
}

}  // namespace
}  // namespace paxsim
