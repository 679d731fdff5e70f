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

#include "paxsim/basic.hpp"

#include <stdexcept>

#include "paxsim/guards.hpp"

namespace paxsim {

Proposer::Proposer(ProcessId self, ProcessSet acceptors, std::optional<ProcessSet> majority)
    : Process(self),
      acceptors_(std::move(acceptors)),
      majority_(majority ? std::move(*majority) : acceptors_),
      n_{0, self} {
  if (acceptors_.empty()) throw ConfigError("proposer needs at least one acceptor");
}

Effects Proposer::start(StepContext&) {
  if (phase_ != Phase::init) throw std::logic_error("proposer already started");
  Effects out;
  send(out, BasicPrepare{n_}, majority_);
  phase_ = Phase::awaiting_responses;
  return out;
}

bool Proposer::step(StepContext& ctx, Effects& out) {
  if (phase_ != Phase::awaiting_responses) return false;
  auto responded = guards::responders(history_, n_);
  if (2 * responded.size() <= acceptors_.size()) return false;

  Value v = 0;
  if (auto reported = guards::highest_reported_value(history_, n_)) {
    v = *reported;
  } else {
    v = ctx.chooser.uniform(kAnyValueMin, kAnyValueMax);
  }
  send(out, BasicAccept{n_, v}, responded);
  proposed_ = v;
  phase_ = Phase::done;
  return true;
}

BasicAcceptor::BasicAcceptor(ProcessId self, ProcessSet learners)
    : Process(self), learners_(std::move(learners)) {}

void BasicAcceptor::on_receive(const Message& m, ProcessId from, StepContext&, Effects& out) {
  if (const auto* p = std::get_if<BasicPrepare>(&m)) {
    on_prepare(*p, from, out);
  } else if (const auto* a = std::get_if<BasicAccept>(&m)) {
    on_accept(*a, out);
  }
}

void BasicAcceptor::on_prepare(const BasicPrepare& m, ProcessId from, Effects& out) {
  if (!guards::above_all_responded(history_, m.n)) return;
  send(out, BasicRespond{m.n, guards::max_sent_accepted(history_)}, from);
}

void BasicAcceptor::on_accept(const BasicAccept& m, Effects& out) {
  if (guards::responded_above(history_, m.n)) return;
  send(out, BasicAccepted{m.n, m.v}, learners_);
}

Learner::Learner(ProcessId self, ProcessSet acceptors)
    : Process(self), acceptors_(std::move(acceptors)) {
  if (acceptors_.empty()) throw ConfigError("learner needs at least one acceptor");
}

bool Learner::step(StepContext& ctx, Effects& out) {
  if (chosen_) return false;
  auto candidates = guards::majority_accepted(history_, acceptors_.size());
  if (candidates.empty()) return false;
  chosen_ = candidates[ctx.chooser.pick(candidates.size())].v;
  out.outputs.push_back(ChosenOutput{*chosen_});
  return true;
}

}  // namespace paxsim
