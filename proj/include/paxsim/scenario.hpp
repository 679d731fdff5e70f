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

// Declarative run descriptions: one JSON document per run fixes the
// algorithm, the process counts, the client workload, the protocol variant,
// co-location, faults and the seed, so a file plus its seed reproduces a run.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "paxsim/checker.hpp"
#include "paxsim/merging.hpp"
#include "paxsim/multi.hpp"
#include "paxsim/simnet.hpp"
#include "paxsim/transport.hpp"
#include "paxsim/variants.hpp"

namespace paxsim {

enum class Algorithm { basic, multi };

struct Counts {
  int proposers = 3;
  int acceptors = 3;
  int learners = 3;
  int leaders = 3;
  int replicas = 3;
  int clients = 1;
};

struct RequestSpec {
  /// Requests issued by each client.
  int count = 10;
  Tick interval = 0;
  Tick retry_after = 0;
  int max_retries = 0;
  /// Request positions (1-based) replaced by a leader reconfiguration.
  std::map<int, ProcessSet> reconfig;
};

struct StopSpec {
  Tick max_ticks = 5000;
  /// Stop once every client request is answered (basic: every learner chose).
  bool all_decided = true;
  /// Stop once the leaders together have entered this many ballots; 0 disables.
  std::int64_t max_rounds = 0;
};

/// Optional outcome checks for named scenarios.
struct Expectation {
  bool safe = true;
  std::optional<bool> stuck;
  std::optional<bool> all_decided;
  std::optional<std::int64_t> min_decisions;
  std::optional<std::int64_t> min_max_1b_payload;
  std::optional<std::int64_t> max_max_1b_payload;
  std::optional<std::int64_t> min_rounds;
  std::optional<std::int64_t> max_rounds;
};

struct Crash {
  ProcessId process;
  Tick tick = 0;
};

struct Scenario {
  std::string name;
  std::string description;
  Algorithm algorithm = Algorithm::multi;
  Counts counts;
  RequestSpec requests;
  VariantConfig variant;
  Topology merged;
  FaultSchedule faults;
  std::vector<Crash> crashes;
  std::map<ProcessId, Tick> start_ticks;
  /// Initial leader set given to replicas; all leaders when unset.
  std::optional<ProcessSet> replica_leaders;
  std::uint64_t seed = 1;
  StopSpec stop;
  Expectation expect;
  SimOptions sim;

  /// Throws ConfigError when counts or topology are inconsistent.
  void validate() const;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& sc);
Scenario load_scenario(const std::filesystem::path& path);

/// Bundled scenario directory (PAXSIM_SCENARIOS overrides the build default).
std::filesystem::path scenario_dir();
/// Loads `<scenario_dir>/<name>.json`. Throws ConfigError when missing.
Scenario named_scenario(const std::string& name);
/// (name, description) of every bundled scenario, sorted by name.
std::vector<std::pair<std::string, std::string>> list_scenarios();

/// The operations client `client` issues under spec.
std::vector<Operation> client_operations(const RequestSpec& spec, std::int64_t client);

/// Every process id the scenario deploys, in id order.
std::vector<ProcessId> scenario_processes(const Scenario& sc);
/// Constructs one process wired as in build_topology. Throws ConfigError for
/// an id the scenario does not deploy.
std::unique_ptr<Process> make_process(const Scenario& sc, ProcessId id);

struct Deployment {
  std::unique_ptr<Simulator> sim;
  std::vector<ProcessId> clients;
  std::vector<ProcessId> learners;
  std::vector<ProcessId> leaders;
  std::vector<std::vector<ProcessId>> hosts;
};

/// Instantiates and wires every process, groups hosts and registers faults,
/// crashes and start ticks. Processes start when the run begins.
Deployment build_topology(const Scenario& sc);

/// Ballots entered so far, summed over leaders.
std::int64_t rounds_attempted(const Deployment& d);

/// Unanswered client commands (basic: empty).
std::vector<Command> pending_requests(const Deployment& d);

struct RunResult {
  RunTrace trace;
  Verdict verdict;
  std::vector<Command> pending;
  bool all_decided = false;
  bool expectation_met = true;
  std::vector<std::string> expectation_failures;
};

/// Builds, runs to the stop condition, checks and evaluates expectations.
RunResult run_scenario(const Scenario& sc, bool online_check = false);
/// Same, for an already built deployment.
RunResult run_deployment(const Scenario& sc, Deployment& d, bool online_check = false);

/// Hosts `group` on a socket node bound to the group's address in peers,
/// started and running. Every process of the scenario needs an address; the
/// group's members must share one. Throws ConfigError.
std::unique_ptr<TransportNode> serve_transport(const Scenario& sc, const std::vector<ProcessId>& group,
                                               const PeerMap& peers, TransportOptions opts = {});

/// A whole deployment on loopback, one socket node per host group.
struct LocalCluster {
  std::vector<std::unique_ptr<TransportNode>> nodes;
  PeerMap peers;

  /// Every hosted client has an answer for all of its requests.
  bool clients_done() const;
  void stop();
};

/// Listens on ephemeral ports and starts every node. Throws ConfigError.
LocalCluster launch_local_cluster(const Scenario& sc, TransportOptions opts = {});

/// First decision per slot as JSON lines {slot, command, leader, tick}.
std::string decision_log(const RunTrace& trace);
nlohmann::json report_json(const Scenario& sc, const RunResult& r);
/// Human-readable metrics table.
std::string report_table(const Scenario& sc, const RunResult& r);

}  // namespace paxsim
