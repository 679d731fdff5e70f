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

#include "paxsim/scenario.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "paxsim/basic.hpp"
#include "paxsim/json_codec.hpp"

#ifndef PAXSIM_SCENARIO_DIR
#define PAXSIM_SCENARIO_DIR "scenarios"
#endif

namespace paxsim {

using nlohmann::json;

namespace {

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* key) { return k == key; })) {
      throw ConfigError("unknown key '" + k + "' in " + where);
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ProcessSet parse_process_set(const json& j) {
  ProcessSet out;
  for (const auto& p : j) out.insert(parse_process_id(p.get<std::string>()));
  return out;
}

json process_set_json(const ProcessSet& ps) {
  json out = json::array();
  for (const auto& p : ps) out.push_back(to_string(p));
  return out;
}

VariantConfig parse_variant(const json& j) {
  only_keys(j,
            {"state_reduction", "failure_detection", "fix_replica_repropose",
             "fix_leader_phase1_timeout", "fix_leader_resend_2a", "fix_leader_phase2_timeout",
             "fix_all", "useless_reply_mode", "timeout", "window", "ping_period", "repropose_timeout",
             "phase1_timeout", "resend_2a_timeout", "phase2_timeout"},
            "variant");
  VariantConfig v;
  read(j, "state_reduction", v.state_reduction);
  read(j, "failure_detection", v.failure_detection);
  read(j, "fix_replica_repropose", v.fix_replica_repropose);
  read(j, "fix_leader_phase1_timeout", v.fix_leader_phase1_timeout);
  read(j, "fix_leader_resend_2a", v.fix_leader_resend_2a);
  read(j, "fix_leader_phase2_timeout", v.fix_leader_phase2_timeout);
  if (j.value("fix_all", false)) v.enable_all_fixes();
  read(j, "useless_reply_mode", v.useless_reply_mode);
  read(j, "timeout", v.timeout);
  read(j, "window", v.window);
  read(j, "ping_period", v.ping_period);
  read(j, "repropose_timeout", v.repropose_timeout);
  read(j, "phase1_timeout", v.phase1_timeout);
  read(j, "resend_2a_timeout", v.resend_2a_timeout);
  read(j, "phase2_timeout", v.phase2_timeout);
  return v;
}

json variant_json(const VariantConfig& v) {
  return {{"state_reduction", v.state_reduction},
          {"failure_detection", v.failure_detection},
          {"fix_replica_repropose", v.fix_replica_repropose},
          {"fix_leader_phase1_timeout", v.fix_leader_phase1_timeout},
          {"fix_leader_resend_2a", v.fix_leader_resend_2a},
          {"fix_leader_phase2_timeout", v.fix_leader_phase2_timeout},
          {"useless_reply_mode", v.useless_reply_mode},
          {"timeout", v.timeout},
          {"window", v.window},
          {"ping_period", v.ping_period},
          {"repropose_timeout", v.repropose_timeout},
          {"phase1_timeout", v.phase1_timeout},
          {"resend_2a_timeout", v.resend_2a_timeout},
          {"phase2_timeout", v.phase2_timeout}};
}

ScriptedRule parse_rule(const json& j) {
  only_keys(j,
            {"tag", "slot", "src", "dst", "src_role", "dst_role", "ballot_round", "first_n", "until_tick",
             "include_local", "action", "delay"},
            "fault rule");
  ScriptedRule r;
  if (j.contains("tag")) {
    const auto name = j.at("tag").get<std::string>();
    r.tag = parse_tag(name);
    if (!r.tag) throw ConfigError("unknown message tag '" + name + "'");
  }
  read(j, "slot", r.slot);
  if (j.contains("src")) r.src = parse_process_id(j.at("src").get<std::string>());
  if (j.contains("dst")) r.dst = parse_process_id(j.at("dst").get<std::string>());
  if (j.contains("src_role")) r.src_role = parse_role(j.at("src_role").get<std::string>());
  if (j.contains("dst_role")) r.dst_role = parse_role(j.at("dst_role").get<std::string>());
  read(j, "ballot_round", r.ballot_round);
  read(j, "first_n", r.first_n);
  read(j, "until_tick", r.until_tick);
  read(j, "include_local", r.include_local);
  const std::string action = j.value("action", std::string("drop"));
  if (action == "drop") {
    r.action = ScriptedRule::Action::drop;
  } else if (action == "delay") {
    r.action = ScriptedRule::Action::delay;
    r.delay = j.at("delay").get<Tick>();
  } else if (action == "duplicate") {
    r.action = ScriptedRule::Action::duplicate;
  } else {
    throw ConfigError("unknown fault action '" + action + "'");
  }
  return r;
}

json rule_json(const ScriptedRule& r) {
  json j;
  if (r.tag) j["tag"] = tag_name(*r.tag);
  if (r.slot) j["slot"] = *r.slot;
  if (r.src) j["src"] = to_string(*r.src);
  if (r.dst) j["dst"] = to_string(*r.dst);
  if (r.src_role) j["src_role"] = role_name(*r.src_role);
  if (r.dst_role) j["dst_role"] = role_name(*r.dst_role);
  if (r.ballot_round) j["ballot_round"] = *r.ballot_round;
  if (r.first_n) j["first_n"] = *r.first_n;
  if (r.until_tick) j["until_tick"] = *r.until_tick;
  if (r.include_local) j["include_local"] = true;
  switch (r.action) {
    case ScriptedRule::Action::drop: j["action"] = "drop"; break;
    case ScriptedRule::Action::delay:
      j["action"] = "delay";
      j["delay"] = r.delay;
      break;
    case ScriptedRule::Action::duplicate: j["action"] = "duplicate"; break;
  }
  return j;
}

Topology parse_merged(const json& j) {
  if (j.is_string()) return parse_topology_name(j.get<std::string>());
  Topology t;
  for (const auto& group : j) {
    std::vector<Role> roles;
    for (const auto& r : group) roles.push_back(parse_role(r.get<std::string>()));
    t.push_back(std::move(roles));
  }
  validate_topology(t);
  return t;
}

std::vector<ProcessId> ids(Role role, int n) {
  std::vector<ProcessId> out;
  for (int i = 1; i <= n; ++i) out.push_back({role, i});
  return out;
}

ProcessSet id_set(Role role, int n) {
  auto v = ids(role, n);
  return {v.begin(), v.end()};
}

}  // namespace

void Scenario::validate() const {
  if (counts.acceptors < 1) throw ConfigError("at least one acceptor is required");
  if (counts.clients < 0 || requests.count < 0) throw ConfigError("counts must be non-negative");
  if (algorithm == Algorithm::multi) {
    if (counts.leaders < 1) throw ConfigError("multi-paxos needs at least one leader");
    if (counts.replicas < 1) throw ConfigError("multi-paxos needs at least one replica");
    variant.validate();
    validate_topology(merged);
    if (replica_leaders) {
      if (replica_leaders->empty()) throw ConfigError("replica_leaders must not be empty");
      for (const auto& l : *replica_leaders) {
        if (l.role != Role::leader || l.index < 1 || l.index > counts.leaders) {
          throw ConfigError("replica_leaders names unknown leader " + to_string(l));
        }
      }
    }
    for (const auto& [i, leaders] : requests.reconfig) {
      if (i < 1 || i > requests.count) throw ConfigError("reconfiguration index out of range");
      make_reconfig(leaders);
    }
  } else {
    if (counts.proposers < 1) throw ConfigError("basic paxos needs at least one proposer");
    if (counts.learners < 0) throw ConfigError("counts must be non-negative");
    for (const auto& g : merged) {
      if (g.size() > 1) throw ConfigError("merging applies to multi-paxos roles only");
    }
  }
  faults.validate();
  if (stop.max_ticks < 0) throw ConfigError("max_ticks must be non-negative");
}

Scenario scenario_from_json(const json& j) {
  only_keys(j,
            {"name", "description", "algorithm", "counts", "requests", "variant", "merged", "faults",
             "crashes", "start_ticks", "replica_leaders", "seed", "stop", "expect", "max_firings"},
            "scenario");
  Scenario sc;
  read(j, "name", sc.name);
  read(j, "description", sc.description);
  const std::string algo = j.value("algorithm", std::string("multi"));
  if (algo == "multi") {
    sc.algorithm = Algorithm::multi;
  } else if (algo == "basic") {
    sc.algorithm = Algorithm::basic;
  } else {
    throw ConfigError("unknown algorithm '" + algo + "'");
  }
  if (j.contains("counts")) {
    const auto& c = j.at("counts");
    only_keys(c, {"proposers", "acceptors", "learners", "leaders", "replicas", "clients"}, "counts");
    read(c, "proposers", sc.counts.proposers);
    read(c, "acceptors", sc.counts.acceptors);
    read(c, "learners", sc.counts.learners);
    read(c, "leaders", sc.counts.leaders);
    read(c, "replicas", sc.counts.replicas);
    read(c, "clients", sc.counts.clients);
  }
  if (j.contains("requests")) {
    const auto& r = j.at("requests");
    only_keys(r, {"count", "interval", "retry_after", "max_retries", "reconfig"}, "requests");
    read(r, "count", sc.requests.count);
    read(r, "interval", sc.requests.interval);
    read(r, "retry_after", sc.requests.retry_after);
    read(r, "max_retries", sc.requests.max_retries);
    if (r.contains("reconfig")) {
      for (const auto& x : r.at("reconfig")) {
        sc.requests.reconfig[x.at("index").get<int>()] = parse_process_set(x.at("leaders"));
      }
    }
  }
  if (j.contains("variant")) sc.variant = parse_variant(j.at("variant"));
  if (j.contains("merged")) sc.merged = parse_merged(j.at("merged"));
  if (j.contains("faults")) {
    const auto& f = j.at("faults");
    only_keys(f, {"drop", "dup", "delay_min", "delay_max", "intra_process", "rules"}, "faults");
    read(f, "drop", sc.faults.drop);
    read(f, "dup", sc.faults.dup);
    read(f, "delay_min", sc.faults.delay_min);
    read(f, "delay_max", sc.faults.delay_max);
    read(f, "intra_process", sc.faults.intra_process);
    if (f.contains("rules")) {
      for (const auto& r : f.at("rules")) sc.faults.rules.push_back(parse_rule(r));
    }
  }
  if (j.contains("crashes")) {
    for (const auto& c : j.at("crashes")) {
      sc.crashes.push_back({parse_process_id(c.at("process").get<std::string>()), c.at("tick").get<Tick>()});
    }
  }
  if (j.contains("start_ticks")) {
    for (const auto& [k, v] : j.at("start_ticks").items()) sc.start_ticks[parse_process_id(k)] = v.get<Tick>();
  }
  if (j.contains("replica_leaders")) sc.replica_leaders = parse_process_set(j.at("replica_leaders"));
  read(j, "seed", sc.seed);
  if (j.contains("stop")) {
    const auto& s = j.at("stop");
    only_keys(s, {"max_ticks", "all_decided", "max_rounds"}, "stop");
    read(s, "max_ticks", sc.stop.max_ticks);
    read(s, "all_decided", sc.stop.all_decided);
    read(s, "max_rounds", sc.stop.max_rounds);
  }
  if (j.contains("expect")) {
    const auto& e = j.at("expect");
    only_keys(e,
              {"safe", "stuck", "all_decided", "min_decisions", "min_max_1b_payload", "max_max_1b_payload",
               "min_rounds", "max_rounds"},
              "expect");
    read(e, "safe", sc.expect.safe);
    read(e, "stuck", sc.expect.stuck);
    read(e, "all_decided", sc.expect.all_decided);
    read(e, "min_decisions", sc.expect.min_decisions);
    read(e, "min_max_1b_payload", sc.expect.min_max_1b_payload);
    read(e, "max_max_1b_payload", sc.expect.max_max_1b_payload);
    read(e, "min_rounds", sc.expect.min_rounds);
    read(e, "max_rounds", sc.expect.max_rounds);
  }
  read(j, "max_firings", sc.sim.max_firings);
  sc.validate();
  return sc;
}

json scenario_to_json(const Scenario& sc) {
  json j;
  j["name"] = sc.name;
  j["description"] = sc.description;
  j["algorithm"] = sc.algorithm == Algorithm::multi ? "multi" : "basic";
  j["counts"] = {{"proposers", sc.counts.proposers}, {"acceptors", sc.counts.acceptors},
                 {"learners", sc.counts.learners},   {"leaders", sc.counts.leaders},
                 {"replicas", sc.counts.replicas},   {"clients", sc.counts.clients}};
  json reconfig = json::array();
  for (const auto& [i, leaders] : sc.requests.reconfig) {
    reconfig.push_back({{"index", i}, {"leaders", process_set_json(leaders)}});
  }
  j["requests"] = {{"count", sc.requests.count},
                   {"interval", sc.requests.interval},
                   {"retry_after", sc.requests.retry_after},
                   {"max_retries", sc.requests.max_retries},
                   {"reconfig", reconfig}};
  j["variant"] = variant_json(sc.variant);
  json merged = json::array();
  for (const auto& g : sc.merged) {
    json group = json::array();
    for (Role r : g) group.push_back(role_name(r));
    merged.push_back(group);
  }
  j["merged"] = merged;
  json rules = json::array();
  for (const auto& r : sc.faults.rules) rules.push_back(rule_json(r));
  j["faults"] = {{"drop", sc.faults.drop},
                 {"dup", sc.faults.dup},
                 {"delay_min", sc.faults.delay_min},
                 {"delay_max", sc.faults.delay_max},
                 {"intra_process", sc.faults.intra_process},
                 {"rules", rules}};
  json crashes = json::array();
  for (const auto& c : sc.crashes) crashes.push_back({{"process", to_string(c.process)}, {"tick", c.tick}});
  j["crashes"] = crashes;
  json starts = json::object();
  for (const auto& [p, t] : sc.start_ticks) starts[to_string(p)] = t;
  j["start_ticks"] = starts;
  if (sc.replica_leaders) j["replica_leaders"] = process_set_json(*sc.replica_leaders);
  j["seed"] = sc.seed;
  j["stop"] = {{"max_ticks", sc.stop.max_ticks},
               {"all_decided", sc.stop.all_decided},
               {"max_rounds", sc.stop.max_rounds}};
  json expect = {{"safe", sc.expect.safe}};
  if (sc.expect.stuck) expect["stuck"] = *sc.expect.stuck;
  if (sc.expect.all_decided) expect["all_decided"] = *sc.expect.all_decided;
  if (sc.expect.min_decisions) expect["min_decisions"] = *sc.expect.min_decisions;
  if (sc.expect.min_max_1b_payload) expect["min_max_1b_payload"] = *sc.expect.min_max_1b_payload;
  if (sc.expect.max_max_1b_payload) expect["max_max_1b_payload"] = *sc.expect.max_max_1b_payload;
  if (sc.expect.min_rounds) expect["min_rounds"] = *sc.expect.min_rounds;
  if (sc.expect.max_rounds) expect["max_rounds"] = *sc.expect.max_rounds;
  j["expect"] = expect;
  j["max_firings"] = sc.sim.max_firings;
  return j;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario " + path.string());
  try {
    Scenario sc = scenario_from_json(json::parse(in));
    if (sc.name.empty()) sc.name = path.stem().string();
    return sc;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::filesystem::path scenario_dir() {
  if (const char* env = std::getenv("PAXSIM_SCENARIOS")) return env;
  return PAXSIM_SCENARIO_DIR;
}

Scenario named_scenario(const std::string& name) {
  const auto path = scenario_dir() / (name + ".json");
  if (!std::filesystem::exists(path)) throw ConfigError("no bundled scenario named '" + name + "'");
  return load_scenario(path);
}

std::vector<std::pair<std::string, std::string>> list_scenarios() {
  std::vector<std::pair<std::string, std::string>> out;
  const auto dir = scenario_dir();
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    const Scenario sc = load_scenario(entry.path());
    out.emplace_back(entry.path().stem().string(), sc.description);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Operation> client_operations(const RequestSpec& spec, std::int64_t client) {
  std::vector<Operation> ops;
  for (int i = 1; i <= spec.count; ++i) {
    if (auto it = spec.reconfig.find(i); it != spec.reconfig.end()) {
      ops.push_back(make_reconfig(it->second));
    } else {
      ops.push_back(AppOp{fmt::format("put k{} v{}.{}", i, client, i)});
    }
  }
  return ops;
}

std::vector<ProcessId> scenario_processes(const Scenario& sc) {
  std::vector<ProcessId> out = ids(Role::acceptor, sc.counts.acceptors);
  auto add = [&](Role r, int n) {
    auto more = ids(r, n);
    out.insert(out.end(), more.begin(), more.end());
  };
  if (sc.algorithm == Algorithm::basic) {
    add(Role::proposer, sc.counts.proposers);
    add(Role::learner, sc.counts.learners);
  } else {
    add(Role::replica, sc.counts.replicas);
    add(Role::leader, sc.counts.leaders);
    add(Role::client, sc.counts.clients);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::unique_ptr<Process> make_process(const Scenario& sc, ProcessId id) {
  const auto all = scenario_processes(sc);
  if (std::find(all.begin(), all.end(), id) == all.end()) {
    throw ConfigError("scenario does not deploy " + to_string(id));
  }
  const auto acceptors = id_set(Role::acceptor, sc.counts.acceptors);
  if (sc.algorithm == Algorithm::basic) {
    switch (id.role) {
      case Role::acceptor: return std::make_unique<BasicAcceptor>(id, id_set(Role::learner, sc.counts.learners));
      case Role::proposer: return std::make_unique<Proposer>(id, acceptors);
      default: return std::make_unique<Learner>(id, acceptors);
    }
  }
  const auto leaders = id_set(Role::leader, sc.counts.leaders);
  const auto replicas = id_set(Role::replica, sc.counts.replicas);
  switch (id.role) {
    case Role::acceptor: return std::make_unique<MultiAcceptor>(id, sc.variant);
    case Role::replica: return std::make_unique<Replica>(id, sc.replica_leaders.value_or(leaders), sc.variant);
    case Role::leader: return std::make_unique<Leader>(id, acceptors, replicas, sc.variant);
    default: {
      const ClientConfig ccfg{sc.requests.interval, sc.requests.retry_after, sc.requests.max_retries};
      return std::make_unique<Client>(id, replicas, client_operations(sc.requests, id.index), ccfg);
    }
  }
}

Deployment build_topology(const Scenario& sc) {
  sc.validate();
  Deployment d;
  d.sim = std::make_unique<Simulator>(sc.seed, sc.faults, sc.sim);
  Simulator& sim = *d.sim;
  for (const auto& id : scenario_processes(sc)) {
    sim.add(make_process(sc, id));
    if (id.role == Role::client) d.clients.push_back(id);
    if (id.role == Role::learner) d.learners.push_back(id);
    if (id.role == Role::leader) d.leaders.push_back(id);
  }
  d.hosts = host_groups(sc.merged, sim.process_ids());
  for (const auto& h : d.hosts) {
    if (h.size() > 1) sim.colocate(h);
  }
  for (const auto& [p, t] : sc.start_ticks) sim.set_start_tick(p, t);
  for (const auto& c : sc.crashes) sim.schedule_crash(c.process, c.tick);
  return d;
}

std::int64_t rounds_attempted(const Deployment& d) {
  std::int64_t n = 0;
  for (const auto& l : d.leaders) n += d.sim->find_as<Leader>(l)->rounds_attempted();
  return n;
}

std::vector<Command> pending_requests(const Deployment& d) {
  std::vector<Command> out;
  for (const auto& c : d.clients) {
    auto more = d.sim->find_as<Client>(c)->pending();
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

namespace {

bool everything_decided(const Deployment& d) {
  for (const auto& c : d.clients) {
    const auto* client = d.sim->find_as<Client>(c);
    for (const auto& cmd : client->commands()) {
      if (!client->answered(cmd.cmd_id)) return false;
    }
  }
  for (const auto& l : d.learners) {
    if (!d.sim->find_as<Learner>(l)->chosen()) return false;
  }
  return true;
}

void expect_eq(RunResult& r, bool ok, const std::string& what) {
  if (!ok) {
    r.expectation_met = false;
    r.expectation_failures.push_back(what);
  }
}

}  // namespace

RunResult run_deployment(const Scenario& sc, Deployment& d, bool online_check) {
  if (online_check) d.sim->set_observer(agreement_watch());
  Simulator::StopFn stop;
  if (sc.stop.all_decided || sc.stop.max_rounds > 0) {
    stop = [&d, &sc](const Simulator&) {
      return (sc.stop.all_decided && everything_decided(d)) ||
             (sc.stop.max_rounds > 0 && rounds_attempted(d) >= sc.stop.max_rounds);
    };
  }
  RunResult r;
  r.trace = d.sim->run_until(stop, sc.stop.max_ticks);
  r.pending = pending_requests(d);
  r.all_decided = everything_decided(d);

  const bool basic = sc.algorithm == Algorithm::basic;
  r.verdict = check_safety(r.trace, basic ? std::optional<ValuePool>(ValuePool{kAnyValueMin, kAnyValueMax})
                                          : std::nullopt);
  if (!basic) r.verdict.absorb(check_application(r.trace, replica_logs(r.trace)));
  if (r.trace.end.reason == EndStatus::Reason::aborted) {
    r.verdict.add({"run aborted", r.trace.end.diagnostic, {}});
  }
  r.verdict.metrics.stuck = detect_stuck(r.trace, r.pending);

  const auto& m = r.verdict.metrics;
  const auto& e = sc.expect;
  expect_eq(r, r.verdict.safe == e.safe, fmt::format("safe: expected {}, got {}", e.safe, r.verdict.safe));
  if (e.stuck) expect_eq(r, m.stuck == *e.stuck, fmt::format("stuck: expected {}, got {}", *e.stuck, m.stuck));
  if (e.all_decided) {
    expect_eq(r, r.all_decided == *e.all_decided,
              fmt::format("all_decided: expected {}, got {}", *e.all_decided, r.all_decided));
  }
  if (e.min_decisions) {
    expect_eq(r, m.decisions >= *e.min_decisions,
              fmt::format("decisions: expected >= {}, got {}", *e.min_decisions, m.decisions));
  }
  if (e.min_max_1b_payload) {
    expect_eq(r, m.max_1b_payload_pvalues >= *e.min_max_1b_payload,
              fmt::format("max 1b payload: expected >= {}, got {}", *e.min_max_1b_payload,
                          m.max_1b_payload_pvalues));
  }
  if (e.max_max_1b_payload) {
    expect_eq(r, m.max_1b_payload_pvalues <= *e.max_max_1b_payload,
              fmt::format("max 1b payload: expected <= {}, got {}", *e.max_max_1b_payload,
                          m.max_1b_payload_pvalues));
  }
  if (e.min_rounds) {
    expect_eq(r, m.ballot_rounds_attempted >= *e.min_rounds,
              fmt::format("ballot rounds: expected >= {}, got {}", *e.min_rounds, m.ballot_rounds_attempted));
  }
  if (e.max_rounds) {
    expect_eq(r, m.ballot_rounds_attempted <= *e.max_rounds,
              fmt::format("ballot rounds: expected <= {}, got {}", *e.max_rounds, m.ballot_rounds_attempted));
  }
  return r;
}

RunResult run_scenario(const Scenario& sc, bool online_check) {
  Deployment d = build_topology(sc);
  return run_deployment(sc, d, online_check);
}

std::unique_ptr<TransportNode> serve_transport(const Scenario& sc, const std::vector<ProcessId>& group,
                                               const PeerMap& peers, TransportOptions opts) {
  sc.validate();
  if (group.empty()) throw ConfigError("transport group is empty");
  require_addresses(peers, scenario_processes(sc));
  const Endpoint bind = peers.at(group.front());
  std::vector<std::unique_ptr<Process>> procs;
  for (const auto& id : group) {
    if (peers.at(id) != bind) throw ConfigError("processes of one node must share an address");
    procs.push_back(make_process(sc, id));
  }
  opts.seed = sc.seed;
  auto node = std::make_unique<TransportNode>(std::move(procs), bind, opts);
  node->start(peers);
  return node;
}

bool LocalCluster::clients_done() const {
  for (const auto& n : nodes) {
    for (const auto& id : n->hosted()) {
      if (id.role != Role::client) continue;
      bool done = true;
      n->inspect(id, [&](const Process& p) { done = dynamic_cast<const Client&>(p).pending().empty(); });
      if (!done) return false;
    }
  }
  return true;
}

void LocalCluster::stop() {
  for (auto& n : nodes) n->stop();
}

LocalCluster launch_local_cluster(const Scenario& sc, TransportOptions opts) {
  sc.validate();
  LocalCluster c;
  for (const auto& g : host_groups(sc.merged, scenario_processes(sc))) {
    std::vector<std::unique_ptr<Process>> procs;
    for (const auto& id : g) procs.push_back(make_process(sc, id));
    c.nodes.push_back(std::make_unique<TransportNode>(std::move(procs), Endpoint{"127.0.0.1", 0}, opts));
    const auto port = c.nodes.back()->listen();
    for (const auto& id : g) c.peers[id] = Endpoint{"127.0.0.1", port};
  }
  for (auto& n : c.nodes) n->start(c.peers);
  return c;
}

std::string decision_log(const RunTrace& trace) {
  std::string out;
  std::set<Slot> seen;
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::send || !e.message) continue;
    const auto* d = std::get_if<Decision>(&*e.message);
    if (d == nullptr || !seen.insert(d->s).second) continue;
    json line = {{"slot", d->s}, {"command", d->c}, {"leader", to_string(e.src)}, {"tick", e.tick}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

json report_json(const Scenario& sc, const RunResult& r) {
  json pending = json::array();
  for (const auto& c : r.pending) pending.push_back(c);
  return {{"scenario", sc.name},
          {"seed", sc.seed},
          {"topology", topology_name(sc.merged)},
          {"end",
           {{"reason", end_reason_name(r.trace.end.reason)},
            {"tick", r.trace.end.tick},
            {"armed_timers", r.trace.end.armed_timers},
            {"in_flight", r.trace.end.in_flight}}},
          {"all_decided", r.all_decided},
          {"pending", pending},
          {"verdict", verdict_to_json(r.verdict)},
          {"expectation", {{"met", r.expectation_met}, {"failures", r.expectation_failures}}}};
}

std::string report_table(const Scenario& sc, const RunResult& r) {
  const auto& m = r.verdict.metrics;
  std::ostringstream out;
  auto row = [&](const std::string& k, const std::string& v) { out << fmt::format("  {:<24} {}\n", k, v); };
  out << "scenario " << (sc.name.empty() ? "(flags)" : sc.name) << "\n";
  row("seed", std::to_string(sc.seed));
  row("topology", topology_name(sc.merged));
  row("end", fmt::format("{} at tick {}", end_reason_name(r.trace.end.reason), r.trace.end.tick));
  row("safe", r.verdict.safe ? "yes" : "NO");
  row("decisions", std::to_string(m.decisions));
  row("pending requests", std::to_string(r.pending.size()));
  row("stuck", m.stuck ? "yes" : "no");
  row("ballot rounds", std::to_string(m.ballot_rounds_attempted));
  row("max 1b payload", std::to_string(m.max_1b_payload_pvalues));
  std::int64_t total = 0;
  for (const auto& [tag, n] : m.messages_by_tag) total += n;
  row("messages sent", std::to_string(total));
  for (const auto& [tag, n] : m.messages_by_tag) row("  " + tag, std::to_string(n));
  for (const auto& v : r.verdict.violations) out << "  violation: " << v.invariant << ": " << v.detail << "\n";
  out << "  expectation " << (r.expectation_met ? "met" : "NOT met") << "\n";
  for (const auto& f : r.expectation_failures) out << "    " << f << "\n";
  return out.str();
}

}  // namespace paxsim
