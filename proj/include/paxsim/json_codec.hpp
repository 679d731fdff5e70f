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

// nlohmann::json adapters for the domain types. Ballots are encoded as
// [round, [role, index]] so they sort the same way as text.

#pragma once

#include "json.hpp"
#include "paxsim/message.hpp"
#include "paxsim/types.hpp"

namespace paxsim {

void to_json(nlohmann::json& j, const ProcessId& id);
void from_json(const nlohmann::json& j, ProcessId& id);

void to_json(nlohmann::json& j, const Ballot& b);
void from_json(const nlohmann::json& j, Ballot& b);

void to_json(nlohmann::json& j, const Operation& op);
void from_json(const nlohmann::json& j, Operation& op);

void to_json(nlohmann::json& j, const Command& c);
void from_json(const nlohmann::json& j, Command& c);

void to_json(nlohmann::json& j, const PValue& p);
void from_json(const nlohmann::json& j, PValue& p);

nlohmann::json message_to_json(const Message& m);
Message message_from_json(const nlohmann::json& j);

}  // namespace paxsim
