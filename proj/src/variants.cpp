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

#include "paxsim/variants.hpp"

#include <map>

#include "paxsim/guards.hpp"

namespace paxsim {

void VariantConfig::validate() const {
  if (window < 1) throw ConfigError("window must be at least 1");
  if (any_timer() && timeout <= 0) throw ConfigError("timeout must be positive when timers are on");
  for (Tick t : {ping_period, repropose_timeout, phase1_timeout, resend_2a_timeout, phase2_timeout}) {
    if (t < 0) throw ConfigError("timer overrides must be non-negative");
  }
}

std::set<PValue> reduced_accepted(const MessageHistory& history) {
  return guards::accepted_reduced(history);
}

std::set<PValue> reported_accepted(const MessageHistory& history, const VariantConfig& cfg) {
  if (!cfg.useless_reply_mode) {
    return cfg.state_reduction ? guards::accepted_reduced(history) : guards::accepted_full(history);
  }
  auto accepted = guards::accepted_full(history);
  std::erase_if(accepted, [&](const PValue& p) {
    return !exists(history.received_at<M2a>(p.slot), [&](const M2a& m, ProcessId) {
              return m.b == p.ballot && m.c == p.command;
            }).has_value();
  });
  if (!cfg.state_reduction) return accepted;
  std::map<Slot, Ballot> top;
  for (const auto& p : accepted) {
    auto [it, fresh] = top.try_emplace(p.slot, p.ballot);
    if (!fresh && it->second < p.ballot) it->second = p.ballot;
  }
  std::erase_if(accepted, [&](const PValue& p) { return p.ballot != top.at(p.slot); });
  return accepted;
}

}  // namespace paxsim
