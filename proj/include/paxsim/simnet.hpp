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

// Deterministic discrete-event network.
//
// Every event sits in one queue ordered by (tick, sequence). Sequence numbers
// are handed out at enqueue time, so two runs with the same seed and the same
// processes replay identically. A delivery appends the message to the target's
// received history and then steps the target until none of its guards holds.
// Roles sharing a host exchange messages in memory within the same dispatch.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "paxsim/process.hpp"

namespace paxsim {

/// Match a per-destination send; unset fields match anything.
struct ScriptedRule {
  enum class Action { drop, delay, duplicate };

  std::optional<std::size_t> tag;  // message kind index
  std::optional<Slot> slot;
  std::optional<ProcessId> src;
  std::optional<ProcessId> dst;
  std::optional<Role> src_role;
  std::optional<Role> dst_role;
  std::optional<std::int64_t> ballot_round;
  /// Applies to the first n matching sends only; unset means all.
  std::optional<std::int64_t> first_n;
  /// Applies to sends at ticks strictly below this bound.
  std::optional<Tick> until_tick;
  /// Also applies to links between roles on one host.
  bool include_local = false;

  Action action = Action::drop;
  Tick delay = 0;  // Action::delay

  bool matches(const Message& m, ProcessId from, ProcessId to, Tick now, bool local) const;
};

struct FaultSchedule {
  double drop = 0.0;
  double dup = 0.0;
  Tick delay_min = 1;
  Tick delay_max = 3;
  /// Probabilistic faults also apply between roles on one host.
  bool intra_process = false;
  /// Evaluated in order; the first match wins and overrides the probabilities.
  std::vector<ScriptedRule> rules;

  /// Throws ConfigError on probabilities outside [0,1] or bad delay bounds.
  void validate() const;
};

enum class EventKind { send, deliver, drop, dup, timer, start, crash, chosen, apply };

std::string_view event_kind_name(EventKind k);
EventKind parse_event_kind(std::string_view name);

struct TraceEvent {
  Tick tick = 0;
  EventKind kind = EventKind::send;
  /// Per-destination send id, shared by the send and its deliveries.
  std::uint64_t id = 0;
  ProcessId src;
  ProcessId dst;
  std::optional<Message> message;
  std::optional<TimerTag> timer;
  std::optional<Output> output;
  bool local = false;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct EndStatus {
  enum class Reason { quiescent, stopped, tick_bound, aborted };
  Reason reason = Reason::quiescent;
  Tick tick = 0;
  std::size_t armed_timers = 0;
  std::size_t in_flight = 0;
  std::string diagnostic;

  /// No pending events and no armed timers.
  bool quiescent() const { return armed_timers == 0 && in_flight == 0 && reason != Reason::aborted; }
  friend bool operator==(const EndStatus&, const EndStatus&) = default;
};

std::string_view end_reason_name(EndStatus::Reason r);

struct RunTrace {
  std::vector<TraceEvent> events;
  EndStatus end;

  friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

nlohmann::json event_to_json(const TraceEvent& e);
TraceEvent event_from_json(const nlohmann::json& j);
/// One JSON object per line, events first and the end status last.
std::string trace_to_jsonl(const RunTrace& t);
RunTrace trace_from_jsonl(const std::string& text);

struct SimOptions {
  /// Guard firings allowed in one settle before the run aborts.
  int max_firings = 100000;
  /// Local deliveries allowed in one dispatch cascade before the run aborts.
  std::size_t max_local_cascade = 1000000;
};

class Simulator {
 public:
  using StopFn = std::function<bool(const Simulator&)>;
  /// Called on every recorded event; returning false halts the run.
  using Observer = std::function<bool(const TraceEvent&)>;

  Simulator(std::uint64_t seed, FaultSchedule faults = {}, SimOptions opts = {});
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Registers a process, started at start_tick once the run begins. Throws
  /// ConfigError on a duplicate id.
  Process& add(std::unique_ptr<Process> p, Tick start_tick = 0);
  template <class T, class... Args>
  T& emplace(Args&&... args) {
    auto owned = std::make_unique<T>(std::forward<Args>(args)...);
    T& ref = *owned;
    add(std::move(owned));
    return ref;
  }
  void set_start_tick(ProcessId id, Tick t);
  /// Places processes on one host. Each id may belong to one host only.
  void colocate(const std::vector<ProcessId>& group);
  void schedule_crash(ProcessId id, Tick t);
  void set_observer(Observer obs) { observer_ = std::move(obs); }

  /// Arms (or re-arms) a timer for owner, firing `after` ticks from now.
  /// Throws std::invalid_argument unless after > 0.
  void arm_timer(ProcessId owner, const TimerTag& tag, Tick after);
  /// No-op when the timer is not armed.
  void cancel_timer(ProcessId owner, const TimerTag& tag);
  bool timer_armed(ProcessId owner, const TimerTag& tag) const;

  /// Drains events until stop holds, the next event lies past max_ticks, or
  /// the queue empties. May be called again to continue.
  const RunTrace& run_until(const StopFn& stop, Tick max_ticks);
  const RunTrace& run_until(Tick max_ticks) { return run_until(nullptr, max_ticks); }

  Tick now() const { return now_; }
  const RunTrace& trace() const { return trace_; }
  Process* find(ProcessId id) const;
  template <class T>
  T* find_as(ProcessId id) const {
    return dynamic_cast<T*>(find(id));
  }
  std::vector<ProcessId> process_ids() const;
  bool crashed(ProcessId id) const { return crashed_.contains(id); }
  bool same_host(ProcessId a, ProcessId b) const;

 private:
  struct Event {
    enum class Kind { deliver, timer, start, crash };
    Tick tick = 0;
    std::uint64_t seq = 0;
    Kind kind = Kind::deliver;
    ProcessId src;
    ProcessId dst;
    std::shared_ptr<const Message> message;
    std::uint64_t send_id = 0;
    TimerTag timer;
    std::uint64_t generation = 0;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.tick != b.tick ? a.tick > b.tick : a.seq > b.seq;
    }
  };
  struct LocalDelivery {
    ProcessId src;
    ProcessId dst;
    std::shared_ptr<const Message> message;
    std::uint64_t send_id;
  };

  void push(Event e);
  bool record(TraceEvent e);
  void route(ProcessId src, ProcessId dst, const std::shared_ptr<const Message>& m);
  void schedule_delivery(ProcessId src, ProcessId dst, const std::shared_ptr<const Message>& m,
                         std::uint64_t id, Tick delay);
  Tick sample_delay();
  void apply(ProcessId owner, Effects&& fx);
  void dispatch(const Event& e);
  void deliver_now(ProcessId src, ProcessId dst, const Message& m, std::uint64_t id, bool local);
  void drain_local();
  StepContext context(ProcessId id);
  void finish(EndStatus::Reason reason, std::string diagnostic = {});

  std::uint64_t seed_;
  FaultSchedule faults_;
  SimOptions opts_;
  std::mt19937_64 net_rng_;
  std::map<ProcessId, std::unique_ptr<Process>> procs_;
  std::map<ProcessId, Chooser> choosers_;
  std::map<ProcessId, Tick> start_ticks_;
  std::map<ProcessId, std::size_t> host_of_;
  std::set<ProcessId> crashed_;
  std::set<ProcessId> started_;
  std::map<std::pair<ProcessId, TimerTag>, std::uint64_t> armed_;
  std::vector<std::int64_t> rule_hits_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::queue<LocalDelivery> local_;
  std::size_t in_flight_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_send_id_ = 0;
  std::uint64_t next_generation_ = 0;
  std::size_t next_host_ = 0;
  Tick now_ = 0;
  bool starts_scheduled_ = false;
  bool halted_ = false;
  RunTrace trace_;
  Observer observer_;
};

}  // namespace paxsim
