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

#include "paxsim/process.hpp"

#include <array>
#include <iterator>
#include <stdexcept>

namespace paxsim {

namespace {

constexpr std::array<std::string_view, 7> kTimerNames = {
    "client_send",      "client_retry",    "replica_repropose", "leader_phase1",
    "leader_resend_2a", "leader_progress", "leader_ping"};

template <class T>
void append(std::vector<T>& dst, std::vector<T>&& src) {
  dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
}

}  // namespace

std::string_view timer_kind_name(TimerKind k) { return kTimerNames.at(static_cast<std::size_t>(k)); }

std::string to_string(const TimerTag& t) {
  return std::string(timer_kind_name(t.kind)) + "(" + std::to_string(t.a) + "," +
         std::to_string(t.b) + ")";
}

void Effects::arm(const TimerTag& tag, Tick after) {
  if (after <= 0) throw std::invalid_argument("timer delay must be positive");
  timers.push_back({tag, after});
}

void Effects::merge(Effects&& other) {
  append(sends, std::move(other.sends));
  append(timers, std::move(other.timers));
  append(outputs, std::move(other.outputs));
}

std::size_t Chooser::pick(std::size_t n) {
  if (n <= 1) return 0;
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
}

std::int64_t Chooser::uniform(std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
}

double Chooser::unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

Effects Process::start(StepContext&) { return {}; }

Effects Process::deliver(const Message& m, ProcessId from, StepContext& ctx) {
  history_.record_received(m, from);
  Effects out;
  on_receive(m, from, ctx, out);
  return out;
}

Effects Process::on_timer(const TimerTag&, StepContext&) { return {}; }

void Process::on_receive(const Message&, ProcessId, StepContext&, Effects&) {}

Effects Process::settle(StepContext& ctx, int max_firings) {
  Effects out;
  int fired = 0;
  while (step(ctx, out)) {
    if (++fired > max_firings) {
      throw SafetyViolation("guard loop in " + to_string(self_) + " exceeded " +
                            std::to_string(max_firings) + " firings");
    }
  }
  return out;
}

void Process::send(Effects& out, const Message& m, const ProcessSet& dests) {
  history_.record_sent(m, dests);
  if (dests.empty()) return;
  out.sends.push_back({m, std::vector<ProcessId>(dests.begin(), dests.end())});
}

void Process::send(Effects& out, const Message& m, ProcessId dest) {
  history_.record_sent(m, dest);
  out.sends.push_back({m, {dest}});
}

}  // namespace paxsim
