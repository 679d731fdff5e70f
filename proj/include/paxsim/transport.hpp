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

// TCP transport for running roles in separate OS processes or threads.
//
// A node hosts one or more processes behind a single listener. Frames are
// newline-delimited JSON envelopes {"src", "dst", "msg"}. Each node runs one
// dispatch thread that owns its processes; reader threads only parse frames
// and hand them over. Timers run on the wall clock with one tick per
// millisecond. A frame that cannot be written is lost; nothing is queued for
// retransmission.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "paxsim/process.hpp"

namespace paxsim {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

std::string to_string(const Endpoint& e);
/// "host:port". Throws ConfigError.
Endpoint parse_endpoint(const std::string& text);

using PeerMap = std::map<ProcessId, Endpoint>;

/// {"L1": "127.0.0.1:7001", ...}
PeerMap peers_from_json(const nlohmann::json& j);
nlohmann::json peers_to_json(const PeerMap& peers);
/// Throws ConfigError naming the first id without an address.
void require_addresses(const PeerMap& peers, const std::vector<ProcessId>& ids);

nlohmann::json envelope(ProcessId src, ProcessId dst, const Message& m);

struct TransportOptions {
  std::chrono::milliseconds tick{1};
  std::chrono::milliseconds backoff_min{10};
  std::chrono::milliseconds backoff_max{500};
  std::uint64_t seed = 1;
};

class TransportNode {
 public:
  TransportNode(std::vector<std::unique_ptr<Process>> procs, Endpoint bind, TransportOptions opts = {});
  ~TransportNode();
  TransportNode(const TransportNode&) = delete;
  TransportNode& operator=(const TransportNode&) = delete;

  /// Binds and listens; returns the bound port (useful with port 0).
  std::uint16_t listen();
  /// Starts the dispatch and accept threads. Every process the node hosts
  /// must have an address in peers. Throws ConfigError.
  void start(PeerMap peers);
  /// Stops all threads and closes every socket. Idempotent.
  void stop();
  bool running() const { return running_; }

  /// Runs fn on the hosted process under the dispatch lock.
  void inspect(ProcessId id, const std::function<void(const Process&)>& fn) const;
  std::vector<ProcessId> hosted() const;
  std::uint64_t frames_sent() const { return frames_sent_; }
  std::uint64_t frames_lost() const { return frames_lost_; }

 private:
  using Clock = std::chrono::steady_clock;
  struct Inbound {
    ProcessId src;
    ProcessId dst;
    Message message;
  };
  struct Link {
    int fd = -1;
    Clock::time_point retry_at{};
    std::chrono::milliseconds backoff{0};
  };
  struct TimerEntry {
    Clock::time_point due;
    std::uint64_t seq;
    ProcessId owner;
    TimerTag tag;
    std::uint64_t generation;
    bool operator>(const TimerEntry& o) const { return due != o.due ? due > o.due : seq > o.seq; }
  };

  void accept_loop();
  void read_loop(int fd);
  void dispatch_loop();
  void handle(ProcessId src, ProcessId dst, const Message& m);
  void apply(ProcessId owner, Effects&& fx);
  void transmit(ProcessId src, ProcessId dst, const Message& m);
  bool connect_link(Link& link, const Endpoint& ep);
  StepContext context(ProcessId id);
  Tick now_ticks() const;

  std::map<ProcessId, std::unique_ptr<Process>> procs_;
  std::map<ProcessId, Chooser> choosers_;
  Endpoint bind_;
  TransportOptions opts_;
  PeerMap peers_;
  Clock::time_point epoch_;

  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> frames_sent_{0};
  std::atomic<std::uint64_t> frames_lost_{0};

  mutable std::mutex state_mu_;  // guards procs_ and timers
  std::mutex inbox_mu_;
  std::condition_variable inbox_cv_;
  std::vector<Inbound> inbox_;
  std::vector<Inbound> local_;

  std::map<Endpoint, Link> links_;
  std::map<std::pair<ProcessId, TimerTag>, std::uint64_t> armed_;
  std::vector<TimerEntry> timers_;  // min-heap on (due, seq)
  std::uint64_t timer_seq_ = 0;

  std::mutex readers_mu_;
  std::vector<int> reader_fds_;
  std::vector<std::thread> readers_;
  std::thread acceptor_;
  std::thread dispatcher_;
};

}  // namespace paxsim
