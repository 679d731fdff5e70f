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

// paxsim command line: run scenarios in the simulator or over sockets,
// re-check saved traces, and list the bundled scenarios.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "paxsim/scenario.hpp"

namespace {

using namespace paxsim;
using nlohmann::json;

constexpr int kExitUnsafe = 1;
constexpr int kExitConfig = 2;

std::atomic<bool> g_interrupted{false};

struct RunFlags {
  std::string scenario;
  std::string algorithm;
  int proposers = 0, learners = 0, leaders = 0, acceptors = 0, replicas = 0, clients = 0, requests = 0;
  std::int64_t window = 0;
  Tick timeout = 0, interval = 0, max_ticks = 0, delay_min = 0, delay_max = 0;
  std::uint64_t seed = 0;
  double drop = 0, dup = 0;
  bool state_reduction = false, failure_detection = false, fix_all = false;
  bool fix_repropose = false, fix_phase1 = false, fix_resend = false, fix_phase2 = false, useless = false;
  std::string merged;
  std::string trace_out, decisions_out, verdict_out;
  bool json_out = false, online = false;
  bool transport = false;
  std::string bind, peers;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Topology parse_merged_flag(const std::string& text) {
  if (!text.empty() && text.front() == '[') {
    Topology t;
    for (const auto& group : json::parse(text)) {
      std::vector<Role> roles;
      for (const auto& r : group) roles.push_back(parse_role(r.get<std::string>()));
      t.push_back(roles);
    }
    validate_topology(t);
    return t;
  }
  return parse_topology_name(text);
}

Scenario resolve(const RunFlags& f, const CLI::App& app) {
  Scenario sc;
  if (!f.scenario.empty()) {
    sc = std::filesystem::exists(f.scenario) ? load_scenario(f.scenario) : named_scenario(f.scenario);
  }
  auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("--algorithm")) {
    if (f.algorithm == "basic") {
      sc.algorithm = Algorithm::basic;
    } else if (f.algorithm == "multi") {
      sc.algorithm = Algorithm::multi;
    } else {
      throw ConfigError("unknown algorithm '" + f.algorithm + "'");
    }
  }
  if (given("--proposers")) sc.counts.proposers = f.proposers;
  if (given("--learners")) sc.counts.learners = f.learners;
  if (given("--leaders")) sc.counts.leaders = f.leaders;
  if (given("--acceptors")) sc.counts.acceptors = f.acceptors;
  if (given("--replicas")) sc.counts.replicas = f.replicas;
  if (given("--clients")) sc.counts.clients = f.clients;
  if (given("--requests")) sc.requests.count = f.requests;
  if (given("--interval")) sc.requests.interval = f.interval;
  if (given("--window")) sc.variant.window = f.window;
  if (given("--timeout")) sc.variant.timeout = f.timeout;
  if (given("--seed")) sc.seed = f.seed;
  if (given("--drop")) sc.faults.drop = f.drop;
  if (given("--dup")) sc.faults.dup = f.dup;
  if (given("--delay-min")) sc.faults.delay_min = f.delay_min;
  if (given("--delay-max")) sc.faults.delay_max = f.delay_max;
  if (given("--max-ticks")) sc.stop.max_ticks = f.max_ticks;
  if (given("--state-reduction")) sc.variant.state_reduction = f.state_reduction;
  if (given("--failure-detection")) sc.variant.failure_detection = f.failure_detection;
  if (given("--fix-all") && f.fix_all) sc.variant.enable_all_fixes();
  if (given("--fix-replica-repropose")) sc.variant.fix_replica_repropose = f.fix_repropose;
  if (given("--fix-phase1-timeout")) sc.variant.fix_leader_phase1_timeout = f.fix_phase1;
  if (given("--fix-resend-2a")) sc.variant.fix_leader_resend_2a = f.fix_resend;
  if (given("--fix-phase2-timeout")) sc.variant.fix_leader_phase2_timeout = f.fix_phase2;
  if (given("--useless-replies")) sc.variant.useless_reply_mode = f.useless;
  if (given("--merged")) sc.merged = parse_merged_flag(f.merged);
  sc.validate();
  return sc;
}

int run_simulated(const Scenario& sc, const RunFlags& f) {
  const RunResult r = run_scenario(sc, f.online);
  if (!f.trace_out.empty()) write_file(f.trace_out, trace_to_jsonl(r.trace));
  if (!f.decisions_out.empty()) write_file(f.decisions_out, decision_log(r.trace));
  if (!f.verdict_out.empty()) write_file(f.verdict_out, verdict_to_json(r.verdict).dump(2) + "\n");
  if (f.json_out) {
    std::cout << report_json(sc, r).dump(2) << "\n";
  } else {
    std::cout << report_table(sc, r);
  }
  return r.verdict.safe && r.expectation_met ? 0 : kExitUnsafe;
}

// Wall-clock runs: TIMEOUT and client pacing are milliseconds.
int run_transport(Scenario sc, const RunFlags& f, const CLI::App& app) {
  if (app.count("--timeout") == 0) sc.variant.timeout = 100;
  const auto deadline = std::chrono::milliseconds(app.count("--max-ticks") ? f.max_ticks : 10000);

  LocalCluster cluster;
  if (f.peers.empty()) {
    cluster = launch_local_cluster(sc, TransportOptions{.seed = sc.seed});
  } else {
    const std::string text = std::filesystem::exists(f.peers) ? read_file(f.peers) : f.peers;
    const PeerMap peers = peers_from_json(json::parse(text));
    if (f.bind.empty()) throw ConfigError("--peers requires --bind naming this node's address");
    const Endpoint bind = parse_endpoint(f.bind);
    std::vector<ProcessId> group;
    for (const auto& [id, ep] : peers) {
      if (ep == bind) group.push_back(id);
    }
    if (group.empty()) throw ConfigError("no process in the peer map uses " + f.bind);
    cluster.nodes.push_back(serve_transport(sc, group, peers, TransportOptions{.seed = sc.seed}));
    cluster.peers = peers;
  }
  auto& nodes = cluster.nodes;

  std::signal(SIGINT, [](int) { g_interrupted = true; });
  const auto t0 = std::chrono::steady_clock::now();
  const bool hosts_clients = std::any_of(nodes.begin(), nodes.end(), [](const auto& n) {
    const auto h = n->hosted();
    return std::any_of(h.begin(), h.end(), [](ProcessId p) { return p.role == Role::client; });
  });
  bool done = false;
  while (!g_interrupted && std::chrono::steady_clock::now() - t0 < deadline) {
    if (hosts_clients && cluster.clients_done()) {
      done = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  cluster.stop();
  if (hosts_clients) {
    std::cout << (done ? "all requests decided" : "requests still pending") << " after " << ms << " ms\n";
    return done ? 0 : kExitUnsafe;
  }
  std::cout << "node stopped after " << ms << " ms\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"paxsim: Multi-Paxos simulation, checking and socket runs"};
  app.require_subcommand(1);
  spdlog::set_level(spdlog::level::warn);

  RunFlags f;
  auto* run = app.add_subcommand("run", "Run a scenario file, a bundled scenario, or flags alone");
  run->add_option("scenario", f.scenario, "Scenario file or bundled scenario name");
  run->add_option("--algorithm", f.algorithm, "basic or multi");
  run->add_option("--proposers", f.proposers);
  run->add_option("--learners", f.learners);
  run->add_option("--leaders", f.leaders);
  run->add_option("--acceptors", f.acceptors);
  run->add_option("--replicas", f.replicas);
  run->add_option("--clients", f.clients);
  run->add_option("--requests", f.requests, "Requests per client");
  run->add_option("--interval", f.interval, "Ticks between a client's requests");
  run->add_option("--window", f.window);
  run->add_option("--timeout", f.timeout, "Timer period in ticks (milliseconds over sockets)");
  run->add_option("--seed", f.seed);
  run->add_option("--drop", f.drop, "Drop probability per message");
  run->add_option("--dup", f.dup, "Duplicate probability per message");
  run->add_option("--delay-min", f.delay_min);
  run->add_option("--delay-max", f.delay_max);
  run->add_option("--max-ticks", f.max_ticks, "Tick bound (milliseconds over sockets)");
  run->add_flag("--state-reduction", f.state_reduction);
  run->add_flag("--failure-detection", f.failure_detection);
  run->add_flag("--fix-all", f.fix_all, "Enable every liveness fix");
  run->add_flag("--fix-replica-repropose", f.fix_repropose);
  run->add_flag("--fix-phase1-timeout", f.fix_phase1);
  run->add_flag("--fix-resend-2a", f.fix_resend);
  run->add_flag("--fix-phase2-timeout", f.fix_phase2);
  run->add_flag("--useless-replies", f.useless, "Acceptors answer unprepared 2a with their own ballot");
  run->add_option("--merged", f.merged, "unmerged, L+A, L+R, L+A+R or JSON groups");
  run->add_option("--trace-out", f.trace_out, "Write the trace as JSON lines");
  run->add_option("--decisions-out", f.decisions_out, "Write the decision log as JSON lines");
  run->add_option("--verdict-out", f.verdict_out, "Write the verdict as JSON");
  run->add_flag("--json", f.json_out, "Print the JSON report instead of the table");
  run->add_flag("--online-check", f.online, "Halt at the first agreement violation");
  run->add_flag("--transport", f.transport, "Run over TCP instead of the simulator");
  run->add_option("--bind", f.bind, "This node's host:port (with --peers)");
  run->add_option("--peers", f.peers, "Peer map file or JSON {id: host:port}");

  std::string trace_path;
  bool basic = false;
  auto* check = app.add_subcommand("check", "Re-check a saved trace");
  check->add_option("trace", trace_path, "Trace file written by run --trace-out")->required();
  check->add_flag("--basic", basic, "Also check single-decree learner agreement");

  auto* list = app.add_subcommand("list-scenarios", "List bundled scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const Scenario sc = resolve(f, *run);
      return f.transport ? run_transport(sc, f, *run) : run_simulated(sc, f);
    }
    if (*check) {
      const RunTrace trace = trace_from_jsonl(read_file(trace_path));
      Verdict v = check_safety(trace, basic ? std::optional<ValuePool>(ValuePool{}) : std::nullopt);
      v.absorb(check_application(trace, replica_logs(trace)));
      v.metrics.stuck = detect_stuck(trace, unanswered_requests(trace));
      std::cout << verdict_to_json(v).dump(2) << "\n";
      return v.safe ? 0 : kExitUnsafe;
    }
    if (*list) {
      for (const auto& [name, description] : list_scenarios()) {
        std::cout << name << "\n    " << description << "\n";
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
