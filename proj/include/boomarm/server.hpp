// Copyright 2026 The Boomarm Authors
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

#pragma once

// Live service: newline-delimited JSON over TCP. One simulation thread owns
// the routing session; network I/O runs on its own thread; commands cross
// through a bounded queue and telemetry leaves as read-only snapshots.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <thread>

#include "boomarm/errormodel.hpp"
#include "boomarm/routing.hpp"
#include "boomarm/service.hpp"

namespace boomarm {

struct WireCommand {
  enum class Kind { kTeleop, kTrigger, kQueryError, kSelectSpeed, kSnapshot };
  Kind kind = Kind::kTeleop;
  nlohmann::json id;  // echoed verbatim in the reply
  Twist twist;
  int hook = 0;
  double theta2 = 0.0, d3 = 0.0, speed = 0.0, ebar = 0.0;
};

/// Throws FormatError on malformed JSON, an unknown type or missing fields.
WireCommand parse_command(const std::string& line);

/// Reply to a query that needs only the error grid. Error replies carry
/// `"type":"error"`; an infeasible speed also carries the lowest-error suggestion.
nlohmann::json answer_grid_query(const WireCommand& cmd, const ErrorGrid* grid);

nlohmann::json error_reply(const nlohmann::json& id, const std::string& message);
nlohmann::json ack_reply(const nlohmann::json& id);

/// `{"type":"state", "t", "q", "ee_true", "ee_est", "mode", "active_hook", "defl_mm"}`.
nlohmann::json telemetry_message(const RoutingSession& session);
/// Full view for a reconnecting client: telemetry plus hooks and their results.
nlohmann::json snapshot_message(const RoutingSession& session);

/// Bounded FIFO. When full, the oldest teleop command is dropped to make room;
/// triggers and queries are never dropped, so they may exceed the bound.
template <class Item>
class CommandQueue {
 public:
  explicit CommandQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(Item item, bool droppable) {
    std::lock_guard lock(mu_);
    if (items_.size() >= capacity_) {
      auto it = std::find_if(items_.begin(), items_.end(), [](const Entry& e) { return e.droppable; });
      if (it != items_.end()) {
        items_.erase(it);
        ++dropped_;
      } else if (droppable) {
        ++dropped_;
        return;
      }
    }
    items_.push_back({std::move(item), droppable});
  }

  std::deque<Item> drain() {
    std::lock_guard lock(mu_);
    std::deque<Item> out;
    for (auto& e : items_) out.push_back(std::move(e.item));
    items_.clear();
    return out;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }
  std::size_t dropped() const {
    std::lock_guard lock(mu_);
    return dropped_;
  }

 private:
  struct Entry {
    Item item;
    bool droppable;
  };
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::deque<Entry> items_;
  std::size_t dropped_ = 0;
};

struct ServiceStats {
  std::uint64_t ticks = 0;
  std::uint64_t overruns = 0;  // ticks that finished after their wall-clock deadline
  std::uint64_t telemetry_sent = 0;
  std::size_t clients = 0;
};

/// Runs the routing session at a fixed step, paced to wall clock, and serves
/// clients. Simulated time advances exactly dt per tick whatever the jitter.
class SimulationServer {
 public:
  SimulationServer(AppConfig cfg, RoutingSession session, std::optional<ErrorGrid> grid);
  ~SimulationServer();
  SimulationServer(const SimulationServer&) = delete;
  SimulationServer& operator=(const SimulationServer&) = delete;

  /// Binds 127.0.0.1:port (0 picks a free port) and starts both threads.
  /// Returns the bound port. Throws std::runtime_error when the port is busy.
  int start(int port, const std::string& address = "127.0.0.1");
  /// Stops both threads and closes every connection. Idempotent.
  void stop();
  /// Blocks until stop() is called from elsewhere.
  void wait();

  ServiceStats stats() const;
  /// Event log of the session (JSON lines). Call after stop().
  void write_event_log(std::ostream& out) const;

  struct Impl;  // opaque; public only so connection handlers can name it

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace boomarm
