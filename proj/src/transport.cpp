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

#include "paxsim/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>

#include <spdlog/spdlog.h>

#include "paxsim/json_codec.hpp"

namespace paxsim {

using nlohmann::json;

namespace {

constexpr auto kConnectTimeoutMs = 200;

sockaddr_in resolve(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw ConfigError("cannot resolve host '" + ep.host + "'");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return addr;
}

bool write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

std::string to_string(const Endpoint& e) { return e.host + ":" + std::to_string(e.port); }

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) throw ConfigError("endpoint must be host:port, got '" + text + "'");
  Endpoint ep;
  ep.host = text.substr(0, colon);
  const char* begin = text.data() + colon + 1;
  const char* end = text.data() + text.size();
  unsigned port = 0;
  auto [ptr, ec] = std::from_chars(begin, end, port);
  if (ec != std::errc() || ptr != end || port > 65535) throw ConfigError("invalid port in '" + text + "'");
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

PeerMap peers_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("peer map must be an object of id -> host:port");
  PeerMap out;
  for (const auto& [k, v] : j.items()) out[parse_process_id(k)] = parse_endpoint(v.get<std::string>());
  return out;
}

json peers_to_json(const PeerMap& peers) {
  json j = json::object();
  for (const auto& [id, ep] : peers) j[to_string(id)] = to_string(ep);
  return j;
}

void require_addresses(const PeerMap& peers, const std::vector<ProcessId>& ids) {
  for (const auto& id : ids) {
    if (!peers.contains(id)) throw ConfigError("peer address missing for " + to_string(id));
  }
}

json envelope(ProcessId src, ProcessId dst, const Message& m) {
  return {{"src", to_string(src)}, {"dst", to_string(dst)}, {"msg", message_to_json(m)}};
}

TransportNode::TransportNode(std::vector<std::unique_ptr<Process>> procs, Endpoint bind,
                             TransportOptions opts)
    : bind_(std::move(bind)), opts_(opts) {
  if (procs.empty()) throw ConfigError("a transport node needs at least one process");
  for (auto& p : procs) {
    const ProcessId id = p->id();
    if (procs_.contains(id)) throw ConfigError("duplicate process " + to_string(id));
    const auto key = (static_cast<std::uint64_t>(id.role) << 32) ^ static_cast<std::uint64_t>(id.index);
    choosers_.emplace(id, Chooser(opts_.seed * 0x9e3779b97f4a7c15ULL + key));
    procs_.emplace(id, std::move(p));
  }
}

TransportNode::~TransportNode() { stop(); }

std::vector<ProcessId> TransportNode::hosted() const {
  std::vector<ProcessId> out;
  for (const auto& [id, p] : procs_) out.push_back(id);
  return out;
}

std::uint16_t TransportNode::listen() {
  if (listen_fd_ >= 0) return bind_.port;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = resolve(bind_);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 64) != 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("cannot listen on " + to_string(bind_) + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  bind_.port = ntohs(addr.sin_port);
  return bind_.port;
}

void TransportNode::start(PeerMap peers) {
  require_addresses(peers, hosted());
  if (running_) throw std::logic_error("transport node already running");
  listen();
  peers_ = std::move(peers);
  epoch_ = Clock::now();
  running_ = true;
  dispatcher_ = std::thread([this] { dispatch_loop(); });
  acceptor_ = std::thread([this] { accept_loop(); });
}

void TransportNode::stop() {
  if (!running_.exchange(false)) return;
  inbox_cv_.notify_all();
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  {
    std::lock_guard lock(readers_mu_);
    for (int fd : reader_fds_) {
      if (fd >= 0) ::shutdown(fd, SHUT_RDWR);
    }
  }
  for (auto& t : readers_) {
    if (t.joinable()) t.join();
  }
  if (dispatcher_.joinable()) dispatcher_.join();
  for (auto& [ep, link] : links_) {
    if (link.fd >= 0) ::close(link.fd);
    link.fd = -1;
  }
}

void TransportNode::inspect(ProcessId id, const std::function<void(const Process&)>& fn) const {
  std::lock_guard lock(state_mu_);
  auto it = procs_.find(id);
  if (it == procs_.end()) throw ConfigError("process " + to_string(id) + " is not hosted here");
  fn(*it->second);
}

Tick TransportNode::now_ticks() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - epoch_).count() /
         std::max<std::int64_t>(1, opts_.tick.count());
}

StepContext TransportNode::context(ProcessId id) { return StepContext{now_ticks(), choosers_.at(id)}; }

void TransportNode::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    std::lock_guard lock(readers_mu_);
    if (!running_) {
      ::close(fd);
      return;
    }
    reader_fds_.push_back(fd);
    readers_.emplace_back([this, fd] { read_loop(fd); });
  }
}

void TransportNode::read_loop(int fd) {
  std::string buffer;
  char chunk[4096];
  while (running_) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (auto nl = buffer.find('\n', start); nl != std::string::npos; nl = buffer.find('\n', start)) {
      const std::string_view line(buffer.data() + start, nl - start);
      start = nl + 1;
      try {
        const json j = json::parse(line);
        Inbound in{parse_process_id(j.at("src").get<std::string>()),
                   parse_process_id(j.at("dst").get<std::string>()), message_from_json(j.at("msg"))};
        std::lock_guard lock(inbox_mu_);
        inbox_.push_back(std::move(in));
      } catch (const std::exception& e) {
        spdlog::warn("discarding malformed frame: {}", e.what());
      }
    }
    buffer.erase(0, start);
    inbox_cv_.notify_one();
  }
  std::lock_guard lock(readers_mu_);
  auto it = std::find(reader_fds_.begin(), reader_fds_.end(), fd);
  if (it != reader_fds_.end()) {
    ::close(fd);
    *it = -1;
  }
}

void TransportNode::dispatch_loop() {
  {
    std::lock_guard lock(state_mu_);
    for (auto& [id, p] : procs_) {
      StepContext ctx = context(id);
      Effects fx = p->start(ctx);
      fx.merge(p->settle(ctx));
      apply(id, std::move(fx));
    }
    while (!local_.empty()) {
      auto batch = std::move(local_);
      local_.clear();
      for (const auto& in : batch) handle(in.src, in.dst, in.message);
    }
  }
  while (running_) {
    std::vector<Inbound> batch;
    {
      std::unique_lock lock(inbox_mu_);
      auto ready = [&] { return !inbox_.empty() || !running_; };
      if (timers_.empty()) {
        inbox_cv_.wait_for(lock, std::chrono::milliseconds(50), ready);
      } else {
        inbox_cv_.wait_until(lock, timers_.front().due, ready);
      }
      batch.swap(inbox_);
    }
    if (!running_) break;
    std::lock_guard lock(state_mu_);
    for (const auto& in : batch) handle(in.src, in.dst, in.message);
    while (!timers_.empty() && timers_.front().due <= Clock::now()) {
      std::pop_heap(timers_.begin(), timers_.end(), std::greater<>());
      TimerEntry t = timers_.back();
      timers_.pop_back();
      auto it = armed_.find({t.owner, t.tag});
      if (it == armed_.end() || it->second != t.generation) continue;
      armed_.erase(it);
      Process& p = *procs_.at(t.owner);
      StepContext ctx = context(t.owner);
      Effects fx = p.on_timer(t.tag, ctx);
      fx.merge(p.settle(ctx));
      apply(t.owner, std::move(fx));
      while (!local_.empty()) {
        auto pending = std::move(local_);
        local_.clear();
        for (const auto& in : pending) handle(in.src, in.dst, in.message);
      }
    }
  }
}

void TransportNode::handle(ProcessId src, ProcessId dst, const Message& m) {
  auto it = procs_.find(dst);
  if (it == procs_.end()) {
    spdlog::warn("frame for {} reached a node not hosting it", to_string(dst));
    return;
  }
  StepContext ctx = context(dst);
  Effects fx = it->second->deliver(m, src, ctx);
  fx.merge(it->second->settle(ctx));
  apply(dst, std::move(fx));
  while (!local_.empty()) {
    auto pending = std::move(local_);
    local_.clear();
    for (const auto& in : pending) handle(in.src, in.dst, in.message);
  }
}

void TransportNode::apply(ProcessId owner, Effects&& fx) {
  for (const auto& s : fx.sends) {
    for (const auto& dst : s.dests) transmit(owner, dst, s.message);
  }
  for (const auto& op : fx.timers) {
    const auto key = std::make_pair(owner, op.tag);
    if (op.is_cancel()) {
      armed_.erase(key);
      continue;
    }
    const std::uint64_t gen = ++timer_seq_;
    armed_[key] = gen;
    timers_.push_back({Clock::now() + op.after * opts_.tick, gen, owner, op.tag, gen});
    std::push_heap(timers_.begin(), timers_.end(), std::greater<>());
  }
}

bool TransportNode::connect_link(Link& link, const Endpoint& ep) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return false;
  sockaddr_in addr = resolve(ep);
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  if (rc != 0 && errno == EINPROGRESS) {
    pollfd pfd{fd, POLLOUT, 0};
    if (::poll(&pfd, 1, kConnectTimeoutMs) == 1) {
      int err = 0;
      socklen_t len = sizeof err;
      ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
      rc = err == 0 ? 0 : -1;
    }
  }
  if (rc != 0) {
    ::close(fd);
    return false;
  }
  ::fcntl(fd, F_SETFL, flags);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  link.fd = fd;
  link.backoff = std::chrono::milliseconds(0);
  return true;
}

void TransportNode::transmit(ProcessId src, ProcessId dst, const Message& m) {
  if (procs_.contains(dst)) {
    local_.push_back({src, dst, m});
    return;
  }
  auto peer = peers_.find(dst);
  if (peer == peers_.end()) {
    spdlog::warn("no address for {}; frame lost", to_string(dst));
    ++frames_lost_;
    return;
  }
  Link& link = links_[peer->second];
  if (link.fd < 0) {
    const auto now = Clock::now();
    if (now < link.retry_at || !connect_link(link, peer->second)) {
      if (now >= link.retry_at) {
        link.backoff = std::clamp(link.backoff * 2, opts_.backoff_min, opts_.backoff_max);
        link.retry_at = now + link.backoff;
      }
      ++frames_lost_;
      return;
    }
  }
  if (!write_all(link.fd, envelope(src, dst, m).dump() + "\n")) {
    ::close(link.fd);
    link.fd = -1;
    ++frames_lost_;
    return;
  }
  ++frames_sent_;
}

}  // namespace paxsim
